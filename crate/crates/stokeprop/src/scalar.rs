//! Scalar abstraction: the numerics are generic over f32/f64.

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::{MatMut, MatRef};
use nalgebra::{DMatrix, RealField};
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating-point scalar the toolkit works over.
///
/// Bundles the nalgebra field operations with primitive conversions and a
/// dense LU backend for the large collocation systems.
pub trait Real:
    RealField + Copy + Default + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    type Lu: DenseLu<Self>;
}

/// Row-pivoted dense LU factorization of a square column-major matrix.
///
/// Factoring never fails outright; a numerically singular system surfaces as
/// non-finite solve output and is caught by the residual and condition-number
/// checks downstream.
pub trait DenseLu<T>: Sized {
    fn factor(a: &DMatrix<T>) -> Self;
    /// Solve `A X = B` in place, overwriting `rhs` with the solution.
    fn solve_in_place(&self, rhs: &mut DMatrix<T>);
    /// Solve `A^T X = B` in place.
    fn solve_transpose_in_place(&self, rhs: &mut DMatrix<T>);
}

/// LU backend delegating to faer (blocked, multi-threaded).
pub struct FaerLu<T: faer::traits::ComplexField> {
    lu: PartialPivLu<T>,
}

macro_rules! impl_real {
    ($t:ty) => {
        impl DenseLu<$t> for FaerLu<$t> {
            fn factor(a: &DMatrix<$t>) -> Self {
                let n = a.nrows();
                assert_eq!(n, a.ncols(), "LU requires a square matrix");
                let view = MatRef::from_column_major_slice(a.as_slice(), n, n);
                Self {
                    lu: PartialPivLu::new(view),
                }
            }

            fn solve_in_place(&self, rhs: &mut DMatrix<$t>) {
                let (n, k) = (rhs.nrows(), rhs.ncols());
                let view = MatMut::from_column_major_slice_mut(rhs.as_mut_slice(), n, k);
                self.lu.solve_in_place(view);
            }

            fn solve_transpose_in_place(&self, rhs: &mut DMatrix<$t>) {
                let (n, k) = (rhs.nrows(), rhs.ncols());
                let view = MatMut::from_column_major_slice_mut(rhs.as_mut_slice(), n, k);
                self.lu.solve_transpose_in_place(view);
            }
        }

        impl Real for $t {
            type Lu = FaerLu<$t>;
        }
    };
}

impl_real!(f32);
impl_real!(f64);

/// Pull an f64 constant into the working scalar type.
#[inline]
pub fn from_f64<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("constant not representable in scalar type")
}
