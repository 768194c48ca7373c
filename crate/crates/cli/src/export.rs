//! CSV export of reconstructed immersions.

use std::fmt::Write;

use lagbonnet_core::reconstruction::Immersion;
use lagbonnet_core::surface::SpaceForm;

/// Tolerance on `|(F, F) - c|` when normalizing lift samples.
pub const PROJECTION_TOLERANCE: f64 = 1e-6;

pub fn header(space: SpaceForm) -> &'static str {
    match space {
        SpaceForm::Flat => "x,y,f1_re,f1_im,f2_re,f2_im",
        _ => "x,y,F0_re,F0_im,F1_re,F1_im,F2_re,F2_im,p0_re,p0_im,p1_re,p1_im,p2_re,p2_im",
    }
}

fn push(line: &mut String, v: f64) {
    write!(line, ",{v:.16e}").expect("writing to a string");
}

/// One row per sample in row-major order; 17 significant digits.
pub fn immersion_csv(imm: &Immersion) -> lagbonnet_core::Result<String> {
    let chart = imm.chart();
    let space = imm.space();
    let mut out = String::from(header(space));
    out.push('\n');
    for i in 0..chart.len() {
        let (ix, iy) = chart.coords(i);
        let mut line = format!("{:.16e},{:.16e}", chart.x(ix), chart.y(iy));
        let p = imm.point(i);
        for v in p {
            push(&mut line, v.re);
            push(&mut line, v.im);
        }
        if space != SpaceForm::Flat {
            for v in imm.projective(i, PROJECTION_TOLERANCE)? {
                push(&mut line, v.re);
                push(&mut line, v.im);
            }
        }
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use lagbonnet_core::chart::ConformalChart;
    use num_complex::Complex64;

    #[test]
    fn flat_rows() {
        let chart = ConformalChart::new(4, 4, (0.0, 1.0), (0.0, 1.0)).unwrap();
        let imm = Immersion::from_fn(SpaceForm::Flat, chart, |x, y| {
            [Complex64::new(x, 0.0), Complex64::new(y, 0.1), Complex64::new(0.0, 0.0)]
        })
        .unwrap();
        let csv = immersion_csv(&imm).unwrap();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines.len(), 17);
        assert_eq!(lines[0], header(SpaceForm::Flat));
        let cols: Vec<f64> = lines[2].split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(cols.len(), 6);
        assert_eq!(cols[0], chart.x(1));
        assert_eq!(cols[5], 0.1);
    }

    #[test]
    fn lift_rows_carry_projective_representatives() {
        let chart = ConformalChart::new(4, 4, (0.0, 1.0), (0.0, 1.0)).unwrap();
        let imm = Immersion::from_fn(SpaceForm::Projective, chart, |x, _| {
            [
                Complex64::from_polar(1.0, x),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
            ]
        })
        .unwrap();
        let csv = immersion_csv(&imm).unwrap();
        let row: Vec<f64> = csv.lines().nth(3).unwrap().split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(row.len(), 14);
        assert!((row[8] - 1.0).abs() < 1e-15 && row[9] == 0.0);
    }
}
