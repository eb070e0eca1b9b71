use std::fmt::Debug;
use std::iter::Sum;

use num_traits::Float;

/// Floating-point element type. Training runs in `f32`; gradient checks
/// instantiate the same code in `f64`.
pub trait Scalar: Float + Default + Debug + Send + Sync + Sum + 'static {
    /// `C = alpha * A B + beta * C` over strided row/column views.
    #[allow(clippy::too_many_arguments)]
    fn gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: &[Self],
        rsa: isize,
        csa: isize,
        b: &[Self],
        rsb: isize,
        csb: isize,
        beta: Self,
        c: &mut [Self],
        rsc: isize,
        csc: isize,
    );

    fn of(x: f64) -> Self {
        <Self as num_traits::NumCast>::from(x).expect("f64 converts to every Scalar")
    }

    fn f64(self) -> f64 {
        self.to_f64().expect("Scalar converts to f64")
    }
}

macro_rules! impl_scalar {
    ($t:ty, $gemm:path) => {
        impl Scalar for $t {
            fn gemm(
                m: usize,
                k: usize,
                n: usize,
                alpha: Self,
                a: &[Self],
                rsa: isize,
                csa: isize,
                b: &[Self],
                rsb: isize,
                csb: isize,
                beta: Self,
                c: &mut [Self],
                rsc: isize,
                csc: isize,
            ) {
                if m == 0 || n == 0 {
                    return;
                }
                // SAFETY: callers pass views whose extents lie inside the slices;
                // `MatView::check` asserts this before every call.
                unsafe {
                    $gemm(
                        m,
                        k,
                        n,
                        alpha,
                        a.as_ptr(),
                        rsa,
                        csa,
                        b.as_ptr(),
                        rsb,
                        csb,
                        beta,
                        c.as_mut_ptr(),
                        rsc,
                        csc,
                    )
                }
            }
        }
    };
}

impl_scalar!(f32, matrixmultiply::sgemm);
impl_scalar!(f64, matrixmultiply::dgemm);

/// Dense row-major matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T> Debug for Matrix<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Matrix[{}x{}]", self.rows, self.cols)
    }
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Matrix { rows, cols, data }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn add_assign(&mut self, other: &Matrix<T>) {
        debug_assert_eq!(self.shape(), other.shape());
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a = *a + b;
        }
    }

    pub fn scale(&mut self, s: T) {
        for a in &mut self.data {
            *a = *a * s;
        }
    }

    pub fn cast<U: Scalar>(&self) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| U::of(x.f64())).collect(),
        }
    }

    pub fn view(&self) -> MatView<'_, T> {
        MatView {
            data: &self.data,
            offset: 0,
            rows: self.rows,
            cols: self.cols,
            rs: self.cols as isize,
            cs: 1,
        }
    }

    /// Appends the rows of `other` (same column count).
    pub fn push_rows(&mut self, other: &Matrix<T>) {
        assert_eq!(self.cols, other.cols);
        self.data.extend_from_slice(&other.data);
        self.rows += other.rows;
    }
}

/// Strided read-only window into a matrix buffer.
#[derive(Clone, Copy)]
pub struct MatView<'a, T> {
    pub data: &'a [T],
    pub offset: usize,
    pub rows: usize,
    pub cols: usize,
    pub rs: isize,
    pub cs: isize,
}

impl<'a, T: Scalar> MatView<'a, T> {
    /// Row-major view over a plain slice.
    pub fn new(data: &'a [T], rows: usize, cols: usize) -> Self {
        assert!(data.len() >= rows * cols);
        MatView {
            data,
            offset: 0,
            rows,
            cols,
            rs: cols as isize,
            cs: 1,
        }
    }

    pub fn t(self) -> Self {
        MatView {
            rows: self.cols,
            cols: self.rows,
            rs: self.cs,
            cs: self.rs,
            ..self
        }
    }

    /// Column block `[start, start + width)`.
    pub fn cols(self, start: usize, width: usize) -> Self {
        assert!(start + width <= self.cols);
        MatView {
            offset: (self.offset as isize + start as isize * self.cs) as usize,
            cols: width,
            ..self
        }
    }

    fn check(&self) {
        if self.rows == 0 || self.cols == 0 {
            return;
        }
        let last = self.offset as isize
            + (self.rows as isize - 1) * self.rs
            + (self.cols as isize - 1) * self.cs;
        assert!(last >= 0 && (last as usize) < self.data.len(), "view out of bounds");
    }

    fn slice(&self) -> &'a [T] {
        &self.data[self.offset..]
    }
}

/// `out[block] = alpha * a b + beta * out[block]`, where the output block is the
/// column window `[col_start, col_start + b.cols)` of `out`.
pub fn gemm_into<T: Scalar>(
    alpha: T,
    a: MatView<'_, T>,
    b: MatView<'_, T>,
    beta: T,
    out: &mut Matrix<T>,
    col_start: usize,
) {
    assert_eq!(a.cols, b.rows, "inner dimensions");
    assert_eq!(a.rows, out.rows, "output rows");
    assert!(col_start + b.cols <= out.cols, "output cols");
    a.check();
    b.check();
    if a.cols == 0 {
        // empty inner product: C = beta * C
        for r in 0..out.rows {
            for c in col_start..col_start + b.cols {
                let x = &mut out.data[r * out.cols + c];
                *x = beta * *x;
            }
        }
        return;
    }
    let cols = out.cols as isize;
    T::gemm(
        a.rows,
        a.cols,
        b.cols,
        alpha,
        a.slice(),
        a.rs,
        a.cs,
        b.slice(),
        b.rs,
        b.cs,
        beta,
        &mut out.data[col_start..],
        cols,
        1,
    );
}

pub fn matmul<T: Scalar>(a: MatView<'_, T>, b: MatView<'_, T>) -> Matrix<T> {
    let mut out = Matrix::zeros(a.rows, b.cols);
    gemm_into(T::one(), a, b, T::zero(), &mut out, 0);
    out
}
