//! Calibration text files.
//!
//! One `key=value` pair per line; blank lines and `#` comments are ignored.
//!
//! ```text
//! roll=0.01
//! pitch=-0.02
//! yaw=1.5708
//! tx=0.1
//! ty=-0.3
//! tz=0.05
//! fx=1200
//! fy=1200
//! cx=960
//! cy=600
//! skew=0            # optional, default 0
//! width=1936
//! height=1216
//! max_depth=50
//! angle_unit=radians  # optional: radians (default) or degrees
//! ```
//!
//! Missing, duplicated or unknown keys are errors.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::geometry::Calibration;

const REQUIRED: [&str; 13] =
    ["roll", "pitch", "yaw", "tx", "ty", "tz", "fx", "fy", "cx", "cy", "width", "height", "max_depth"];
const OPTIONAL: [&str; 2] = ["skew", "angle_unit"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AngleUnit {
    #[default]
    Radians,
    Degrees,
}

pub fn parse_calibration(text: &str) -> Result<Calibration> {
    let mut fields: BTreeMap<&str, &str> = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("calibration line {}: expected key=value", lineno + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        if !REQUIRED.contains(&key) && !OPTIONAL.contains(&key) {
            return Err(Error::Parse(format!("calibration line {}: unknown key {key:?}", lineno + 1)));
        }
        if fields.insert(key, value).is_some() {
            return Err(Error::Parse(format!("calibration line {}: duplicate key {key:?}", lineno + 1)));
        }
    }
    if let Some(missing) = REQUIRED.iter().find(|k| !fields.contains_key(*k)) {
        return Err(Error::Parse(format!("calibration is missing key {missing:?}")));
    }

    let real = |key: &str| -> Result<f64> {
        let v = fields[key];
        v.parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| Error::Parse(format!("calibration key {key:?}: {v:?} is not a finite number")))
    };
    let size = |key: &str| -> Result<u32> {
        let v = fields[key];
        v.parse::<u32>().map_err(|_| Error::Parse(format!("calibration key {key:?}: {v:?} is not a pixel count")))
    };
    let unit = match fields.get("angle_unit").copied() {
        None | Some("radians") => AngleUnit::Radians,
        Some("degrees") => AngleUnit::Degrees,
        Some(other) => return Err(Error::Parse(format!("unknown angle_unit {other:?}"))),
    };
    let angle = |key: &str| -> Result<f64> {
        let v = real(key)?;
        Ok(match unit {
            AngleUnit::Radians => v,
            AngleUnit::Degrees => v.to_radians(),
        })
    };
    let skew = if fields.contains_key("skew") { real("skew")? } else { 0.0 };

    let calib = Calibration {
        roll: angle("roll")?,
        pitch: angle("pitch")?,
        yaw: angle("yaw")?,
        translation: Vector3::new(real("tx")?, real("ty")?, real("tz")?),
        intrinsics: Calibration::pinhole(real("fx")?, real("fy")?, real("cx")?, real("cy")?, skew),
        image_width: size("width")?,
        image_height: size("height")?,
        max_depth: real("max_depth")?,
    };
    calib.validate()?;
    Ok(calib)
}

/// Serializes with angles in radians; values round-trip exactly.
pub fn format_calibration(calib: &Calibration) -> String {
    let k = &calib.intrinsics;
    let t = &calib.translation;
    format!(
        "roll={}\npitch={}\nyaw={}\ntx={}\nty={}\ntz={}\nfx={}\nfy={}\ncx={}\ncy={}\nskew={}\nwidth={}\nheight={}\nmax_depth={}\nangle_unit=radians\n",
        calib.roll,
        calib.pitch,
        calib.yaw,
        t.x,
        t.y,
        t.z,
        k[(0, 0)],
        k[(1, 1)],
        k[(0, 2)],
        k[(1, 2)],
        k[(0, 1)],
        calib.image_width,
        calib.image_height,
        calib.max_depth,
    )
}

pub fn read_calibration(path: &Path) -> Result<Calibration> {
    parse_calibration(&super::read_text(path)?)
}

pub fn write_calibration(path: &Path, calib: &Calibration) -> Result<()> {
    super::write_bytes(path, format_calibration(calib).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# radar -> camera
roll=0.01
pitch=-0.02
yaw=1.5
tx=0.1
ty=-0.3
tz=0.05
fx=1200
fy=1150
cx=960
cy=600
width=1936
height=1216
max_depth=50
";

    #[test]
    fn parses_sample() {
        let c = parse_calibration(SAMPLE).unwrap();
        assert_eq!(c.yaw, 1.5);
        assert_eq!(c.intrinsics[(1, 1)], 1150.0);
        assert_eq!(c.intrinsics[(0, 1)], 0.0);
        assert_eq!(c.intrinsics[(2, 2)], 1.0);
        assert_eq!((c.image_width, c.image_height), (1936, 1216));
    }

    #[test]
    fn round_trip() {
        let c = parse_calibration(&format!("{SAMPLE}skew=0.25\n")).unwrap();
        assert_eq!(parse_calibration(&format_calibration(&c)).unwrap(), c);
    }

    #[test]
    fn degrees_are_converted() {
        let text = SAMPLE.replace("yaw=1.5", "yaw=90") + "angle_unit=degrees\n";
        let c = parse_calibration(&text).unwrap();
        assert!((c.yaw - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!((c.roll - 0.01f64.to_radians()).abs() < 1e-15);
    }

    #[test]
    fn rejects_missing_duplicate_unknown_and_bad_values() {
        for key in REQUIRED {
            let text: String =
                SAMPLE.lines().filter(|l| !l.starts_with(&format!("{key}="))).map(|l| format!("{l}\n")).collect();
            assert!(parse_calibration(&text).is_err(), "missing {key} accepted");
        }
        assert!(parse_calibration(&format!("{SAMPLE}fx=3\n")).is_err());
        assert!(parse_calibration(&format!("{SAMPLE}focal=3\n")).is_err());
        assert!(parse_calibration(&SAMPLE.replace("fx=1200", "fx=abc")).is_err());
        assert!(parse_calibration(&SAMPLE.replace("fx=1200", "fx=-1")).is_err());
        assert!(parse_calibration(&SAMPLE.replace("width=1936", "width=-4")).is_err());
        assert!(parse_calibration(&SAMPLE.replace("yaw=1.5", "yaw=NaN")).is_err());
        assert!(parse_calibration(&format!("{SAMPLE}no equals sign\n")).is_err());
        assert!(parse_calibration(&format!("{SAMPLE}angle_unit=grads\n")).is_err());
    }
}
