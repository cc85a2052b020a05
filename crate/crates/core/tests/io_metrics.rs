use flowinterp::grid::{ScalarField, VectorField};
use flowinterp::io::{decode_flo, encode_flo, encode_pgm, read_flo, read_image, write_flo, write_image, ImageFormat};
use flowinterp::metrics::{interpolation_error, interpolation_error_cropped, mass, total_variation, EvalReport};
use std::path::Path;

fn gradient_image() -> ScalarField<f64> {
    ScalarField::from_fn(13, 9, |x, y| (x * 17 + y * 5) as f64).unwrap()
}

#[test]
fn eight_bit_formats_round_trip_integers() {
    let dir = tempfile::tempdir().unwrap();
    let f = gradient_image();
    for ext in ["png", "pgm"] {
        let path = dir.path().join(format!("frame.{ext}"));
        write_image(&path, &f).unwrap();
        let back: ScalarField<f64> = read_image(&path).unwrap();
        assert_eq!(back, f, "{ext}");
    }
}

#[test]
fn float_format_is_exact_for_f32_values() {
    let dir = tempfile::tempdir().unwrap();
    let f = ScalarField::from_fn(7, 5, |x, y| (x as f64) * 0.125 - (y as f64) * 3.5 + 300.0).unwrap();
    let path = dir.path().join("frame.pfm");
    write_image(&path, &f).unwrap();
    assert_eq!(read_image::<f64>(&path).unwrap(), f);
}

#[test]
fn eight_bit_output_is_rounded_and_clamped() {
    let f = ScalarField::from_fn(4, 4, |x, _| [-5.0, 0.4, 127.6, 300.0][x]).unwrap();
    let bytes = encode_pgm(&f, false);
    let pixels = &bytes[bytes.len() - 16..];
    assert_eq!(&pixels[..4], &[0, 0, 128, 255]);
}

#[test]
fn flo_round_trip_and_layout() {
    let b = VectorField::from_fn(6, 5, |x, y| (x as f64 - 2.5, 0.25 * y as f64)).unwrap();
    let bytes = encode_flo(&b);
    assert_eq!(&bytes[..4], b"PIEH");
    assert_eq!(i32::from_le_bytes(bytes[4..8].try_into().unwrap()), 6);
    assert_eq!(i32::from_le_bytes(bytes[8..12].try_into().unwrap()), 5);
    assert_eq!(bytes.len(), 12 + 6 * 5 * 8);
    assert_eq!(decode_flo::<f64>(&bytes).unwrap(), b);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("flow.flo");
    write_flo(&path, &b).unwrap();
    assert_eq!(read_flo::<f64>(&path).unwrap(), b);
    assert!(decode_flo::<f64>(&bytes[..20]).is_err());
    assert!(decode_flo::<f64>(b"nope").is_err());
}

#[test]
fn unknown_extensions_and_missing_files_fail() {
    assert!(ImageFormat::from_path(Path::new("a.bmp")).is_err());
    assert_eq!(ImageFormat::from_path(Path::new("A.PNG")).unwrap(), ImageFormat::Png);
    assert!(read_image::<f64>("/nonexistent/frame.png").is_err());
}

#[test]
fn interpolation_error_values() {
    let a = ScalarField::constant(8, 8, 10.0).unwrap();
    let b = ScalarField::constant(8, 8, 13.0).unwrap();
    assert_eq!(interpolation_error(&a, &a).unwrap(), 0.0);
    assert_eq!(interpolation_error(&a, &b).unwrap(), 3.0);

    // error only on the border ring disappears once cropped
    let ring = ScalarField::from_fn(8, 8, |x, y| if x == 0 || y == 0 || x == 7 || y == 7 { 99.0 } else { 10.0 }).unwrap();
    assert!(interpolation_error(&ring, &a).unwrap() > 0.0);
    assert_eq!(interpolation_error_cropped(&ring, &a, 1).unwrap(), 0.0);
    assert!(interpolation_error_cropped(&ring, &a, 4).is_err());
    assert!(interpolation_error(&a, &ScalarField::constant(9, 8, 0.0).unwrap()).is_err());
}

#[test]
fn conservation_diagnostics() {
    let f = gradient_image();
    assert_eq!(mass(&f), f.values().iter().sum::<f64>());
    let step = ScalarField::from_fn(6, 4, |x, _| if x < 3 { 0.0 } else { 2.0 }).unwrap();
    assert_eq!(total_variation(&step), 8.0);

    let r = EvalReport::compute(&f, &f, 0, 1e-9).unwrap();
    assert_eq!((r.ie, r.mass_drift, r.tv_ratio), (0.0, 0.0, 1.0));
    assert_eq!(r.div_residual, 1e-9);
}
