use scatterlab_browser::ops::{cgo_decay, phantom_slice, stability_curve};

#[test]
fn slice_is_vacuum_at_the_corners_and_dips_at_the_centre() {
    let n = 24;
    let s = phantom_slice(-0.05, 0.4, 0.3, n).unwrap();
    assert_eq!(s.len(), n * n);
    assert_eq!(s[0], 1.0);
    assert_eq!(s[n * n - 1], 1.0);
    let centre = s[(n / 2) * n + n / 2];
    assert!(centre < 1.0 && centre > 0.8, "{centre}");
    assert!(s.iter().all(|v| *v <= 1.0));
}

#[test]
fn slice_rejects_bumps_outside_the_support() {
    assert!(phantom_slice(-0.05, 0.4, 0.9, 16).is_err());
}

#[test]
fn decay_shrinks_with_rho() {
    let out = cgo_decay(-0.05, 0.4, 0.3, &[2.0, 4.0, 8.0]).unwrap();
    assert_eq!(out.len(), 6);
    assert!(out[0] < out[2] && out[2] < out[4]);
    assert!(out[1] > out[3] && out[3] > out[5], "{out:?}");
}

#[test]
fn curve_rows_follow_the_schedule() {
    let out = stability_curve(6, 1.0, -8.0, 0.0, 5).unwrap();
    assert_eq!(out.len(), 20);
    let rows: Vec<&[f64]> = out.chunks(4).collect();
    assert!((rows[0][0] - 1e-8).abs() < 1e-20);
    assert!((rows[4][0] - 1.0).abs() < 1e-12);
    for w in rows.windows(2) {
        assert!(w[0][1] > w[1][1], "rho grows as delta shrinks");
        assert!(w[0][3] < w[1][3], "bound grows with delta");
    }
    // s = 1 at m = 6: bound = C / ln(3 + 1/δ)
    assert!((rows[4][3] - 1.0 / 4f64.ln()).abs() < 1e-12);
}
