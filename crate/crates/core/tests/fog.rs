use proptest::prelude::*;

use radlabel::fog::{apply_fog, fog_intensity, DepthImage, Encoding, FogParams, LinearImage, DEFAULT_BETAS};

fn pixels() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..300).prop_flat_map(|n| {
        (
            prop::collection::vec(0.0f64..=1.0, 3 * n),
            prop::collection::vec(prop_oneof![4 => 0.1f64..200.0, 1 => Just(0.0), 1 => Just(f64::NAN)], n),
        )
    })
}

fn frame(data: Vec<f64>, depths: Vec<f64>) -> (LinearImage, DepthImage) {
    let n = depths.len() as u32;
    (LinearImage::new(n, 1, 3, data).unwrap(), DepthImage::new(n, 1, depths).unwrap())
}

proptest! {
    #[test]
    fn zero_beta_leaves_valid_pixels_untouched((data, depths) in pixels()) {
        let (img, depth) = frame(data, depths);
        let out = apply_fog(&img, &depth, &FogParams::new(0.0)).unwrap();
        for (i, &d) in depth.depths.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (out.data[3 * i + k], img.data[3 * i + k]);
                if DepthImage::is_valid(d) {
                    prop_assert_eq!(a.to_bits(), b.to_bits());
                } else {
                    prop_assert_eq!(a, FogParams::new(0.0).airlight[k]);
                }
            }
        }
    }

    #[test]
    fn denser_fog_moves_toward_airlight((data, depths) in pixels(), a in 0.0f64..=1.0) {
        let (img, depth) = frame(data, depths);
        let mut prev: Option<LinearImage> = None;
        for beta in DEFAULT_BETAS {
            let out = apply_fog(&img, &depth, &FogParams { beta, airlight: [a; 3] }).unwrap();
            prop_assert!(out.data.iter().all(|v| (0.0..=1.0).contains(v)));
            if let Some(p) = &prev {
                for (i, (&x, &y)) in p.data.iter().zip(&out.data).enumerate() {
                    let orig = img.data[i];
                    prop_assert!((y - a).abs() <= (x - a).abs() + 1e-15);
                    prop_assert!(orig.min(a) - 1e-15 <= y && y <= orig.max(a) + 1e-15);
                }
            }
            prev = Some(out);
        }
    }

    #[test]
    fn far_limit_is_airlight(i in 0.0f64..=1.0, a in 0.0f64..=1.0, beta in 0.02f64..1.0) {
        prop_assert!((fog_intensity(i, 1e9, beta, a) - a).abs() <= 1e-6);
        prop_assert_eq!(fog_intensity(i, f64::INFINITY, beta, a), a);
    }

    #[test]
    fn matches_closed_form(i in 0.0f64..=1.0, a in 0.0f64..=1.0, beta in 0.0f64..1.0, d in 0.01f64..300.0) {
        let t = 1.0 / (beta * d).exp();
        prop_assert!((fog_intensity(i, d, beta, a) - (i * t + a * (1.0 - t))).abs() <= 1e-12);
    }
}

#[test]
fn encodings_round_trip_every_byte() {
    for enc in [Encoding::Linear, Encoding::Srgb] {
        for v in 0..=255u8 {
            assert_eq!(enc.encode(enc.decode(v)), v, "{enc:?} {v}");
        }
        assert_eq!(enc.encode(-1.0), 0);
        assert_eq!(enc.encode(2.0), 255);
    }
}

#[test]
fn invalid_parameters_are_rejected() {
    let (img, depth) = frame(vec![0.5; 6], vec![1.0, 2.0]);
    assert!(apply_fog(&img, &depth, &FogParams::new(-0.1)).is_err());
    assert!(apply_fog(&img, &depth, &FogParams::new(f64::NAN)).is_err());
    assert!(apply_fog(&img, &depth, &FogParams { beta: 0.1, airlight: [1.5, 0.0, 0.0] }).is_err());
    let small = DepthImage::new(1, 1, vec![1.0]).unwrap();
    assert!(apply_fog(&img, &small, &FogParams::new(0.1)).is_err());
    assert!(LinearImage::new(2, 1, 2, vec![0.0; 4]).is_err());
}
