//! CSV tables and trajectory files.
//!
//! A trajectory file holds one row per sample with columns
//! `t`, the base pose (`C_x C_y C_z` then `C_r00..C_r22` row-major),
//! `V1_{k}_{c}` for `k < depth` and `c < 6`, and `q{id}_{k}` for `k ≤ depth`
//! where `id` is the one-based id of the joint's child body.
//! Lines starting with `#` are metadata and ignored on read.

use std::io::{Read, Write};

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::kinematics::MotionInput;
use crate::liegroup::{Pose, Twist};
use crate::model::RobotModel;

/// A header plus numeric rows, with optional `#` metadata lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub metadata: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

fn csv_error(e: csv::Error) -> Error {
    Error::Data(e.to_string())
}

impl Table {
    pub fn new(header: Vec<String>) -> Self {
        Self {
            header,
            ..Self::default()
        }
    }

    pub fn push(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.header.len() {
            return Err(Error::Data(format!(
                "row has {} values for {} columns",
                row.len(),
                self.header.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Index of a required column.
    pub fn require(&self, name: &str) -> Result<usize> {
        self.column(name)
            .ok_or_else(|| Error::Data(format!("missing column {name}")))
    }

    pub fn write(&self, mut out: impl Write) -> Result<()> {
        for m in &self.metadata {
            writeln!(out, "# {m}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header).map_err(csv_error)?;
        for row in &self.rows {
            // `{}` prints the shortest representation that round-trips.
            w.write_record(row.iter().map(|v| format!("{v}"))).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read(input: impl Read) -> Result<Self> {
        let mut text = String::new();
        let mut input = input;
        input.read_to_string(&mut text)?;
        let metadata = text
            .lines()
            .take_while(|l| l.starts_with('#'))
            .map(|l| l.trim_start_matches('#').trim().to_string())
            .collect();
        let mut r = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header: Vec<String> = r.headers().map_err(csv_error)?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(csv_error)?;
            let row = rec
                .iter()
                .enumerate()
                .map(|(c, v)| {
                    v.parse::<f64>().map_err(|_| {
                        Error::Data(format!("row {}: column {}: not a number: {v:?}", i + 1, header[c]))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        Ok(Self { metadata, header, rows })
    }
}

/// One trajectory sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub motion: MotionInput,
}

/// Column name of joint `j` (zero-based) at derivative `k`.
pub fn joint_column(prefix: &str, j: usize, k: usize) -> String {
    format!("{prefix}{}_{k}", j + 2)
}

const POSE_COLUMNS: [&str; 12] = [
    "C_x", "C_y", "C_z", "C_r00", "C_r01", "C_r02", "C_r10", "C_r11", "C_r12", "C_r20", "C_r21", "C_r22",
];

fn trajectory_header(n_joints: usize, depth: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend(POSE_COLUMNS.iter().map(|s| s.to_string()));
    for k in 0..depth {
        for c in 0..6 {
            h.push(format!("V1_{k}_{c}"));
        }
    }
    for j in 0..n_joints {
        for k in 0..=depth {
            h.push(joint_column("q", j, k));
        }
    }
    h
}

/// Writes samples of a common depth.
pub fn trajectory_table(model: &RobotModel, samples: &[Sample]) -> Result<Table> {
    let depth = samples.first().map_or(0, |s| s.motion.twist_depth());
    let mut table = Table::new(trajectory_header(model.n_joints(), depth));
    for s in samples {
        let m = &s.motion;
        if m.twist_depth() != depth || m.joints.len() != model.n_joints() {
            return Err(Error::Data(format!("sample at t={} has a different shape", s.t)));
        }
        let mut row = vec![s.t];
        row.extend(m.base_pose.translation.iter());
        row.extend(m.base_pose.rotation.transpose().iter());
        for v in &m.base_twist {
            row.extend(v.iter());
        }
        for q in &m.joints {
            if q.len() != depth + 1 {
                return Err(Error::StackSize {
                    what: "joint stack",
                    expected: depth + 1,
                    found: q.len(),
                });
            }
            row.extend(q.iter());
        }
        table.push(row)?;
    }
    Ok(table)
}

/// Reads samples; the depth is the largest `k` for which every column exists.
pub fn samples_from_table(model: &RobotModel, table: &Table) -> Result<Vec<Sample>> {
    let nj = model.n_joints();
    let mut depth = 0;
    while table.column(&format!("V1_{depth}_0")).is_some() {
        depth += 1;
    }
    let t = table.require("t")?;
    let pose: Vec<usize> = POSE_COLUMNS.iter().map(|c| table.require(c)).collect::<Result<_>>()?;
    let twist: Vec<usize> = (0..depth)
        .flat_map(|k| (0..6).map(move |c| format!("V1_{k}_{c}")))
        .map(|c| table.require(&c))
        .collect::<Result<_>>()?;
    let joints: Vec<Vec<usize>> = (0..nj)
        .map(|j| (0..=depth).map(|k| table.require(&joint_column("q", j, k))).collect())
        .collect::<Result<_>>()?;
    table
        .rows
        .iter()
        .map(|row| {
            let rotation = Matrix3::from_fn(|i, c| row[pose[3 + 3 * i + c]]);
            let base_pose = Pose::new(rotation, Vector3::new(row[pose[0]], row[pose[1]], row[pose[2]]));
            if base_pose.orthonormality_error() > 1e-9 {
                return Err(Error::Data(format!("row t={}: base rotation is not orthonormal", row[t])));
            }
            let base_twist = twist.chunks(6).map(|c| Twist::from_fn(|i, _| row[c[i]])).collect();
            let joints = joints.iter().map(|cols| cols.iter().map(|&c| row[c]).collect()).collect();
            Ok(Sample {
                t: row[t],
                motion: MotionInput {
                    base_pose,
                    base_twist,
                    joints,
                },
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tilthex::{build_tilthex, TiltHexParams, TiltHexTrajectory};

    #[test]
    fn trajectory_round_trip() {
        let model = build_tilthex(&TiltHexParams::default()).unwrap();
        let traj = TiltHexTrajectory::default();
        let samples: Vec<Sample> = [0.0, 1.3, 17.0]
            .iter()
            .map(|&t| Sample {
                t,
                motion: traj.eval(t, 4).unwrap(),
            })
            .collect();
        let mut table = trajectory_table(&model, &samples).unwrap();
        table.metadata.push("generator: test".into());
        let mut buf = Vec::new();
        table.write(&mut buf).unwrap();
        let back = Table::read(buf.as_slice()).unwrap();
        assert_eq!(back, table);
        assert_eq!(samples_from_table(&model, &back).unwrap(), samples);
    }

    #[test]
    fn bad_values_are_reported() {
        let text = "t,a\n0,1\n1,x\n";
        let err = Table::read(text.as_bytes()).unwrap_err().to_string();
        assert!(err.contains("row 2") && err.contains("column a"), "{err}");
        let mut t = Table::new(vec!["a".into()]);
        assert!(t.push(vec![1.0, 2.0]).is_err());
    }
}
