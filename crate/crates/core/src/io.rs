//! File formats: nested-array matrices for JSON documents and the
//! `k,u_1..u_m,y_1..y_p` trajectory CSV.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::behavioral::TrajectoryData;
use crate::error::{Error, Result};
use crate::Scalar;

pub fn matrix_from_rows<T: Scalar>(rows: &[Vec<f64>]) -> Result<DMatrix<T>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != c) {
        return Err(Error::Parse("ragged matrix rows".into()));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| T::lit(rows[i][j])))
}

pub fn matrix_to_rows<T: Scalar>(m: &DMatrix<T>) -> Vec<Vec<f64>> {
    m.row_iter()
        .map(|row| row.iter().map(|x| x.as_f64()).collect())
        .collect()
}

pub fn vector_to_vec<T: Scalar>(v: &DVector<T>) -> Vec<f64> {
    v.iter().map(|x| x.as_f64()).collect()
}

pub fn vector_from_slice<T: Scalar>(v: &[f64]) -> DVector<T> {
    DVector::from_iterator(v.len(), v.iter().map(|&x| T::lit(x)))
}

pub fn write_trajectory_csv<T: Scalar, W: Write>(data: &TrajectoryData<T>, out: W) -> Result<()> {
    let (m, p) = (data.input_dim(), data.output_dim());
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["k".to_string()];
    header.extend((1..=m).map(|i| format!("u_{i}")));
    header.extend((1..=p).map(|i| format!("y_{i}")));
    w.write_record(&header)?;
    for k in 0..data.len() {
        let mut rec = vec![k.to_string()];
        rec.extend(data.inputs().column(k).iter().map(|x| x.as_f64().to_string()));
        rec.extend(data.outputs().column(k).iter().map(|x| x.as_f64().to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trajectory_csv<T: Scalar, R: Read>(input: R) -> Result<TrajectoryData<T>> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers()?.clone();
    if header.get(0).map(str::trim) != Some("k") {
        return Err(Error::Parse("first column must be `k`".into()));
    }
    let m = header.iter().filter(|h| h.trim().starts_with("u_")).count();
    let p = header.iter().filter(|h| h.trim().starts_with("y_")).count();
    if m == 0 || p == 0 || header.len() != 1 + m + p {
        return Err(Error::Parse(format!(
            "expected header k,u_1..u_m,y_1..y_p, got {:?}",
            header.iter().collect::<Vec<_>>()
        )));
    }
    let mut u_cols = Vec::new();
    let mut y_cols = Vec::new();
    for (line, rec) in rd.records().enumerate() {
        let rec = rec?;
        if rec.len() != 1 + m + p {
            return Err(Error::Parse(format!("row {line} has {} fields", rec.len())));
        }
        let parse = |s: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("row {line}: {e}")))
        };
        for j in 0..m {
            u_cols.push(parse(&rec[1 + j])?);
        }
        for j in 0..p {
            y_cols.push(parse(&rec[1 + m + j])?);
        }
    }
    let t = u_cols.len() / m;
    let u = DMatrix::from_iterator(m, t, u_cols.into_iter().map(T::lit));
    let y = DMatrix::from_iterator(p, t, y_cols.into_iter().map(T::lit));
    TrajectoryData::new(u, y)
}

pub fn save_trajectory_csv<T: Scalar>(data: &TrajectoryData<T>, path: impl AsRef<Path>) -> Result<()> {
    write_trajectory_csv(data, std::fs::File::create(path)?)
}

pub fn load_trajectory_csv<T: Scalar>(path: impl AsRef<Path>) -> Result<TrajectoryData<T>> {
    read_trajectory_csv(std::fs::File::open(path)?)
}

/// Stacks the columns of a `q × T` window into a `q·T` vector (time-major).
pub fn window_to_vector<T: Scalar>(m: &DMatrix<T>) -> DVector<T> {
    DVector::from_column_slice(m.as_slice())
}

/// Inverse of [`window_to_vector`].
pub fn vector_to_window<T: Scalar>(v: &DVector<T>, channels: usize) -> DMatrix<T> {
    DMatrix::from_column_slice(channels, v.len() / channels, v.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn csv_header_layout() {
        let data = TrajectoryData::new(
            DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]),
            DMatrix::from_row_slice(1, 2, &[0.5, -0.25]),
        )
        .unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&data, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "k,u_1,u_2,y_1\n0,1,3,0.5\n1,2,4,-0.25\n");
    }

    #[test]
    fn bad_header_is_rejected() {
        let text = "t,u_1,y_1\n0,1,2\n";
        assert!(read_trajectory_csv::<f64, _>(text.as_bytes()).is_err());
        let ragged = matrix_from_rows::<f64>(&[vec![1.0], vec![1.0, 2.0]]);
        assert!(ragged.is_err());
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_exact(vals in prop::collection::vec(-1e6f64..1e6, 3..40)) {
            let t = vals.len() / 3;
            let u = DMatrix::from_fn(2, t, |i, j| vals[2 * j + i]);
            let y = DMatrix::from_fn(1, t, |_, j| vals[2 * t + j]);
            let data = TrajectoryData::new(u, y).unwrap();
            let mut buf = Vec::new();
            write_trajectory_csv(&data, &mut buf).unwrap();
            let back: TrajectoryData<f64> = read_trajectory_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(back, data);
        }
    }
}
