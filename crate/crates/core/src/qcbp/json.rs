use serde::{Deserialize, Serialize};

use super::{Instance, QcbpError};
use crate::rational::{ComplexRational, Rational, RationalMatrix, RationalVector};

/// Wire format of an [`Instance`]: every number is an exact `"num/den"` string.
///
/// ```json
/// {"a_re": [["2", "1"]], "a_im": [["0", "0"]], "y_re": ["1"], "y_im": ["0"], "eps": "0"}
/// ```
///
/// `a_im` and `y_im` may be omitted for real instances.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceJson {
    pub a_re: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_im: Option<Vec<Vec<String>>>,
    pub y_re: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_im: Option<Vec<String>>,
    pub eps: String,
}

fn parse(s: &str) -> Result<Rational, QcbpError> {
    Ok(s.parse::<Rational>()?)
}

impl TryFrom<InstanceJson> for Instance {
    type Error = QcbpError;

    fn try_from(j: InstanceJson) -> Result<Self, Self::Error> {
        let rows = j.a_re.len();
        let cols = j.a_re.first().map_or(0, Vec::len);
        let mut entries = Vec::with_capacity(rows * cols);
        for (i, row) in j.a_re.iter().enumerate() {
            if row.len() != cols {
                return Err(QcbpError::Dimensions(format!("row {i} has {} entries, expected {cols}", row.len())));
            }
            for (k, re) in row.iter().enumerate() {
                let im = match &j.a_im {
                    Some(im) => parse(im.get(i).and_then(|r| r.get(k)).ok_or_else(|| {
                        QcbpError::Dimensions("a_im does not match a_re".into())
                    })?)?,
                    None => Rational::zero(),
                };
                entries.push(ComplexRational::new(parse(re)?, im));
            }
        }
        if let Some(im) = &j.a_im {
            if im.len() != rows || im.iter().any(|r| r.len() != cols) {
                return Err(QcbpError::Dimensions("a_im does not match a_re".into()));
            }
        }
        let a = RationalMatrix::new(rows, cols, entries)?;
        if let Some(im) = &j.y_im {
            if im.len() != j.y_re.len() {
                return Err(QcbpError::Dimensions("y_im does not match y_re".into()));
            }
        }
        let y = j
            .y_re
            .iter()
            .enumerate()
            .map(|(i, re)| {
                let im = match &j.y_im {
                    Some(im) => parse(&im[i])?,
                    None => Rational::zero(),
                };
                Ok(ComplexRational::new(parse(re)?, im))
            })
            .collect::<Result<Vec<_>, QcbpError>>()?;
        Instance::new(a, RationalVector::new(y), parse(&j.eps)?)
    }
}

impl From<Instance> for InstanceJson {
    fn from(inst: Instance) -> Self {
        let a = inst.a();
        let grid = |f: &dyn Fn(&ComplexRational) -> String| -> Vec<Vec<String>> {
            (0..a.rows()).map(|i| a.row(i).iter().map(f).collect()).collect()
        };
        let real = inst.is_real();
        InstanceJson {
            a_re: grid(&|z| z.re.to_string()),
            a_im: (!real).then(|| grid(&|z| z.im.to_string())),
            y_re: inst.y().entries().iter().map(|z| z.re.to_string()).collect(),
            y_im: (!real).then(|| inst.y().entries().iter().map(|z| z.im.to_string()).collect()),
            eps: inst.eps().to_string(),
        }
    }
}
