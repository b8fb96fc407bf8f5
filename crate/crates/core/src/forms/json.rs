//! JSON expression trees for exact forms.
//!
//! ```json
//! {"degree": 2, "terms": [{"index": [1, 2], "poly": [{"exponents": [0,1,0,0], "num": "3", "den": "2"}]}]}
//! ```
//! Indices are 1-based coordinate numbers; rationals are decimal strings.

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use super::coefficient::Coefficient;
use super::form::{DifferentialForm, MultiIndex};
use super::poly::{Poly4, Rational};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonomialJson {
    pub exponents: [u32; 4],
    pub num: String,
    pub den: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermJson {
    pub index: Vec<usize>,
    pub poly: Vec<MonomialJson>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormJson {
    pub degree: usize,
    pub terms: Vec<TermJson>,
}

pub fn poly_to_json(p: &Poly4) -> Vec<MonomialJson> {
    p.terms()
        .map(|(e, c)| MonomialJson {
            exponents: *e,
            num: c.numer().to_string(),
            den: c.denom().to_string(),
        })
        .collect()
}

pub fn poly_from_json(v: &[MonomialJson]) -> Result<Poly4> {
    let mut terms = Vec::with_capacity(v.len());
    for m in v {
        let num: BigInt = m
            .num
            .parse()
            .map_err(|_| Error::Json(format!("bad numerator `{}`", m.num)))?;
        let den: BigInt = m
            .den
            .parse()
            .map_err(|_| Error::Json(format!("bad denominator `{}`", m.den)))?;
        if den == BigInt::from(0) {
            return Err(Error::Json("zero denominator".into()));
        }
        terms.push((m.exponents, Rational::new(num, den)));
    }
    Ok(Poly4::from_terms(terms))
}

pub fn form_to_json(f: &DifferentialForm) -> Result<FormJson> {
    let mut terms = Vec::new();
    for (m, c) in f.terms() {
        let p = c.as_poly().ok_or(Error::NotExact)?;
        terms.push(TermJson {
            index: m.indices().iter().map(|i| i + 1).collect(),
            poly: poly_to_json(p),
        });
    }
    Ok(FormJson {
        degree: f.degree(),
        terms,
    })
}

pub fn form_from_json(j: &FormJson) -> Result<DifferentialForm> {
    if j.degree > 4 {
        return Err(Error::Json(format!("degree {} out of range", j.degree)));
    }
    let mut out = DifferentialForm::zero(j.degree);
    for t in &j.terms {
        if t.index.len() != j.degree || t.index.iter().any(|&i| i == 0 || i > 4) {
            return Err(Error::Json(format!("bad index {:?}", t.index)));
        }
        let idx: Vec<usize> = t.index.iter().map(|i| i - 1).collect();
        let (_, m) = MultiIndex::from_indices(&idx)
            .ok_or_else(|| Error::Json(format!("repeated index {:?}", t.index)))?;
        if m.indices() != idx {
            return Err(Error::Json(format!("index not increasing {:?}", t.index)));
        }
        let p = poly_from_json(&t.poly)?;
        out = out.add(&DifferentialForm::from_terms(
            j.degree,
            vec![(m, Coefficient::Exact(p))],
        ));
    }
    Ok(out)
}

pub fn form_to_string(f: &DifferentialForm) -> Result<String> {
    serde_json::to_string(&form_to_json(f)?).map_err(|e| Error::Json(e.to_string()))
}

pub fn form_from_str(s: &str) -> Result<DifferentialForm> {
    let j: FormJson = serde_json::from_str(s).map_err(|e| Error::Json(e.to_string()))?;
    form_from_json(&j)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::poly::rat;

    #[test]
    fn round_trip() {
        let f = DifferentialForm::term(Poly4::var(1).scale(&rat(-3, 7)), &[0, 2])
            .add(&DifferentialForm::term(Poly4::int(2), &[1, 3]));
        let s = form_to_string(&f).unwrap();
        let g = form_from_str(&s).unwrap();
        assert!(f.exact_eq(&g).unwrap());
        assert!(s.contains("\"num\":\"-3\""));
    }

    #[test]
    fn malformed_rejected() {
        assert!(form_from_str(r#"{"degree":2,"terms":[{"index":[2,1],"poly":[]}]}"#).is_err());
        assert!(form_from_str(r#"{"degree":1,"terms":[{"index":[5],"poly":[]}]}"#).is_err());
        assert!(form_from_str(
            r#"{"degree":0,"terms":[{"index":[],"poly":[{"exponents":[0,0,0,0],"num":"1","den":"0"}]}]}"#
        )
        .is_err());
    }
}
