use rustfft::num_complex::Complex64;

use super::field::{Field, SpectralField};
use crate::error::Result;
use crate::par;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Forward transform into Fourier-series coefficients (see [`SpectralField`]).
pub fn transform(f: &Field) -> Result<SpectralField> {
    f.check_finite("transform input")?;
    Ok(transform_unchecked(f))
}

pub(crate) fn transform_unchecked(f: &Field) -> SpectralField {
    let grid = f.grid();
    let n = grid.n();
    let half = grid.half();
    let plans = &grid.plans;
    let scale = 1.0 / (n * n) as f64;

    // Rows: real-to-complex along x₁.
    let mut rows = vec![ZERO; n * half];
    par::for_each_chunk_init(
        &mut rows,
        half,
        || (vec![0.0; n], plans.r2c.make_scratch_vec()),
        |(input, scratch), j, out| {
            input.copy_from_slice(&f.values()[j * n..(j + 1) * n]);
            plans
                .r2c
                .process_with_scratch(input, out, scratch)
                .expect("buffer sizes fixed by plan");
        },
    );

    // Columns: complex FFT along x₂ on the transposed layout.
    let mut coeffs = vec![ZERO; half * n];
    par::for_each_chunk_init(
        &mut coeffs,
        n,
        || vec![ZERO; plans.forward.get_inplace_scratch_len()],
        |scratch, c, col| {
            for (j, z) in col.iter_mut().enumerate() {
                *z = rows[j * half + c];
            }
            plans.forward.process_with_scratch(col, scratch);
            for z in col.iter_mut() {
                *z *= scale;
            }
        },
    );
    SpectralField::from_raw(grid, coeffs)
}

/// Inverse of [`transform`]. Imaginary parts that cannot be represented by a
/// real field (self-conjugate modes) are discarded.
pub fn inverse(spec: &SpectralField) -> Field {
    let grid = spec.grid();
    let n = grid.n();
    let half = grid.half();
    let plans = &grid.plans;

    let mut cols = spec.coeffs().to_vec();
    par::for_each_chunk_init(
        &mut cols,
        n,
        || vec![ZERO; plans.backward.get_inplace_scratch_len()],
        |scratch, _, col| plans.backward.process_with_scratch(col, scratch),
    );

    let mut values = vec![0.0; n * n];
    par::for_each_chunk_init(
        &mut values,
        n,
        || (vec![ZERO; half], plans.c2r.make_scratch_vec()),
        |(row, scratch), j, out| {
            for (c, z) in row.iter_mut().enumerate() {
                *z = cols[c * n + j];
            }
            row[0].im = 0.0;
            row[half - 1].im = 0.0;
            plans
                .c2r
                .process_with_scratch(row, out, scratch)
                .expect("buffer sizes fixed by plan");
        },
    );
    Field::from_values(grid, values).expect("shape fixed by grid")
}
