//! JSON helpers shared by the bound reports.

use nalgebra::DMatrix;
use serde::ser::{SerializeStruct, Serializer};

/// Serializes a matrix as `{"rows": r, "cols": c, "data": [[row 0], [row 1], …]}`.
pub fn row_major<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
    let data: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
    let mut st = s.serialize_struct("Matrix", 3)?;
    st.serialize_field("rows", &m.nrows())?;
    st.serialize_field("cols", &m.ncols())?;
    st.serialize_field("data", &data)?;
    st.end()
}

pub fn row_major_opt<S: Serializer>(m: &Option<DMatrix<f64>>, s: S) -> Result<S::Ok, S::Error> {
    match m {
        Some(m) => row_major(m, s),
        None => s.serialize_none(),
    }
}
