//! Text form of a simulated scenario.
//!
//! One directive per line, `#` starts a comment:
//!
//! ```text
//! name      <word>
//! seed      <u64>
//! frames    <u32>
//! noise     [zero|moderate] [key=value ...]
//! sensor    key=value ...
//! ego       <frame:x:y> ...
//! ego_yaw   <rad>
//! object    <id> <type> <l> <w> <h> <frame:x:y> ...
//! object_yaw <id> <rad>
//! object_visibility <id> <v0> <v1> ...
//! occluder  <x> <y> <l> <w> <h> <yaw>
//! clutter   <x> <y> <yaw> <rate> <score_lo> <score_hi>
//! ```
//!
//! Positions are world-frame metres; objects and occluders rest on the ground.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use regtrack_core::geometry::{Box3D, FrameId};
use regtrack_core::simworld::{ClutterSite, NoiseParams, ObjectSpec, Scenario, Waypoint, SENSOR_HEIGHT};

use crate::error::{Error, Result};
use crate::kitti::category_of;

fn num<T: FromStr>(tok: &str, what: &str, path: &Path, line: usize) -> Result<T> {
    tok.parse().map_err(|_| Error::parse(path, line, format!("bad {what}: {tok:?}")))
}

fn waypoint(tok: &str, path: &Path, line: usize) -> Result<Waypoint> {
    let parts: Vec<&str> = tok.split(':').collect();
    let [f, x, y] = parts[..] else {
        return Err(Error::parse(path, line, format!("waypoints are frame:x:y, got {tok:?}")));
    };
    Ok(Waypoint::new(num(f, "frame", path, line)?, num(x, "x", path, line)?, num(y, "y", path, line)?))
}

fn set_noise(n: &mut NoiseParams, key: &str, v: f64) -> bool {
    let slot = match key {
        "pos_sigma" => &mut n.pos_sigma,
        "yaw_sigma" => &mut n.yaw_sigma,
        "size_sigma" => &mut n.size_sigma,
        "score_sigma" => &mut n.score_sigma,
        "pixel_sigma" => &mut n.pixel_sigma,
        "miss_rate" => &mut n.miss_rate,
        "clutter_per_frame" => &mut n.clutter_per_frame,
        _ => return false,
    };
    *slot = v;
    true
}

fn object_mut<'a>(sc: &'a mut Scenario, id: u32, path: &Path, line: usize) -> Result<&'a mut ObjectSpec> {
    sc.objects
        .iter_mut()
        .find(|o| o.id == id)
        .ok_or_else(|| Error::parse(path, line, format!("object {id} not declared yet")))
}

fn ground_box(x: f64, y: f64, l: f64, w: f64, h: f64, yaw: f64) -> regtrack_core::Result<Box3D> {
    Box3D::new(x, y, -SENSOR_HEIGHT + h / 2.0, l, w, h, yaw, FrameId::World)
}

pub fn parse_scenario(text: &str, path: &Path) -> Result<Scenario> {
    let mut sc = Scenario::empty("scenario", 0, 0);
    sc.ego.clear();
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let body = raw.split('#').next().unwrap_or("");
        let t: Vec<&str> = body.split_whitespace().collect();
        let Some((&key, args)) = t.split_first() else { continue };
        let arity = |k: usize| -> Result<()> {
            if args.len() == k {
                Ok(())
            } else {
                Err(Error::parse(path, n, format!("{key} takes {k} values, got {}", args.len())))
            }
        };
        match key {
            "name" => {
                arity(1)?;
                sc.name = args[0].to_string();
            }
            "seed" => {
                arity(1)?;
                sc.seed = num(args[0], "seed", path, n)?;
            }
            "frames" => {
                arity(1)?;
                sc.frames = num(args[0], "frame count", path, n)?;
            }
            "noise" => {
                for a in args {
                    match *a {
                        "zero" => sc.noise = NoiseParams::ZERO,
                        "moderate" => sc.noise = NoiseParams::MODERATE,
                        kv => {
                            let (k, v) = kv.split_once('=').ok_or_else(|| Error::parse(path, n, format!("expected key=value, got {kv:?}")))?;
                            if !set_noise(&mut sc.noise, k, num(v, k, path, n)?) {
                                return Err(Error::parse(path, n, format!("unknown noise key {k:?}")));
                            }
                        }
                    }
                }
            }
            "sensor" => {
                for kv in args {
                    let (k, v) = kv.split_once('=').ok_or_else(|| Error::parse(path, n, format!("expected key=value, got {kv:?}")))?;
                    let s = &mut sc.sensor;
                    match k {
                        "fov_deg" => s.fov_deg = num(v, k, path, n)?,
                        "rays" => s.rays = num(v, k, path, n)?,
                        "full_range" => s.full_range = num(v, k, path, n)?,
                        "max_range" => s.max_range = num(v, k, path, n)?,
                        "drop_threshold" => s.drop_threshold = num(v, k, path, n)?,
                        "det_ceiling" => s.det_ceiling = num(v, k, path, n)?,
                        "response_gain" => s.response_gain = num(v, k, path, n)?,
                        "label_range" => s.label_range = num(v, k, path, n)?,
                        _ => return Err(Error::parse(path, n, format!("unknown sensor key {k:?}"))),
                    }
                }
            }
            "ego" => {
                for a in args {
                    sc.ego.push(waypoint(a, path, n)?);
                }
            }
            "ego_yaw" => {
                arity(1)?;
                sc.ego_yaw = Some(num(args[0], "yaw", path, n)?);
            }
            "object" => {
                if args.len() < 6 {
                    return Err(Error::parse(path, n, "object needs id, type, l, w, h and at least one waypoint"));
                }
                let category = category_of(args[1]).ok_or_else(|| Error::parse(path, n, format!("unknown type {:?}", args[1])))?;
                let size = [num(args[2], "l", path, n)?, num(args[3], "w", path, n)?, num(args[4], "h", path, n)?];
                let waypoints = args[5..].iter().map(|a| waypoint(a, path, n)).collect::<Result<_>>()?;
                sc.objects.push(ObjectSpec { id: num(args[0], "id", path, n)?, category, size, waypoints, yaw: None, visibility: None });
            }
            "object_yaw" => {
                arity(2)?;
                let yaw = num(args[1], "yaw", path, n)?;
                object_mut(&mut sc, num(args[0], "id", path, n)?, path, n)?.yaw = Some(yaw);
            }
            "object_visibility" => {
                let Some((id, vals)) = args.split_first() else { return Err(Error::parse(path, n, "object_visibility needs an id")) };
                let vals = vals.iter().map(|v| num(v, "visibility", path, n)).collect::<Result<_>>()?;
                object_mut(&mut sc, num(id, "id", path, n)?, path, n)?.visibility = Some(vals);
            }
            "occluder" => {
                arity(6)?;
                let v: Vec<f64> = args.iter().map(|a| num(a, "occluder value", path, n)).collect::<Result<_>>()?;
                let b = ground_box(v[0], v[1], v[2], v[3], v[4], v[5]).map_err(|e| Error::parse(path, n, e.to_string()))?;
                sc.occluders.push(b);
            }
            "clutter" => {
                arity(6)?;
                let v: Vec<f64> = args.iter().map(|a| num(a, "clutter value", path, n)).collect::<Result<_>>()?;
                sc.clutter_sites.push(ClutterSite { x: v[0], y: v[1], yaw: v[2], rate: v[3], score_lo: v[4], score_hi: v[5] });
            }
            _ => return Err(Error::parse(path, n, format!("unknown directive {key:?}"))),
        }
    }
    if sc.ego.is_empty() {
        sc.ego.push(Waypoint::new(0.0, 0.0, 0.0));
    }
    sc.validate().map_err(|e| Error::parse(path, 0, e.to_string()))?;
    Ok(sc)
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    parse_scenario(&crate::error::read_to_string(path)?, path)
}

fn waypoints(out: &mut String, w: &[Waypoint]) {
    for p in w {
        let _ = write!(out, " {}:{}:{}", p.frame, p.x, p.y);
    }
}

/// Writes a scenario in the form [`parse_scenario`] reads. The camera
/// calibration is not part of the format.
pub fn format_scenario(sc: &Scenario) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "name {}\nseed {}\nframes {}", sc.name, sc.seed, sc.frames);
    let n = &sc.noise;
    let _ = writeln!(
        out,
        "noise pos_sigma={} yaw_sigma={} size_sigma={} score_sigma={} pixel_sigma={} miss_rate={} clutter_per_frame={}",
        n.pos_sigma, n.yaw_sigma, n.size_sigma, n.score_sigma, n.pixel_sigma, n.miss_rate, n.clutter_per_frame
    );
    let s = &sc.sensor;
    let _ = writeln!(
        out,
        "sensor fov_deg={} rays={} full_range={} max_range={} drop_threshold={} det_ceiling={} response_gain={} label_range={}",
        s.fov_deg, s.rays, s.full_range, s.max_range, s.drop_threshold, s.det_ceiling, s.response_gain, s.label_range
    );
    out.push_str("ego");
    waypoints(&mut out, &sc.ego);
    out.push('\n');
    if let Some(y) = sc.ego_yaw {
        let _ = writeln!(out, "ego_yaw {y}");
    }
    for o in &sc.objects {
        let [l, w, h] = o.size;
        let _ = write!(out, "object {} {} {l} {w} {h}", o.id, o.category);
        waypoints(&mut out, &o.waypoints);
        out.push('\n');
        if let Some(y) = o.yaw {
            let _ = writeln!(out, "object_yaw {} {y}", o.id);
        }
        if let Some(v) = &o.visibility {
            let vals: Vec<String> = v.iter().map(f64::to_string).collect();
            let _ = writeln!(out, "object_visibility {} {}", o.id, vals.join(" "));
        }
    }
    for b in &sc.occluders {
        let _ = writeln!(out, "occluder {} {} {} {} {} {}", b.cx, b.cy, b.l, b.w, b.h, b.yaw);
    }
    for c in &sc.clutter_sites {
        let _ = writeln!(out, "clutter {} {} {} {} {} {}", c.x, c.y, c.yaw, c.rate, c.score_lo, c.score_hi);
    }
    out
}
