use std::collections::BTreeMap;

use super::parser::{parse_expression, Expr};
use super::typed::{compile_parsed, Expression, Type, Value};
use super::{CompileError, ComputeError};
use crate::exec::{self, ExecMode};
use crate::model::{get_path, AttributeValue, Attributes, FeatureCollection};

/// Per-feature program: variables bound to attributes, one expression, and
/// one output attribute per element of the expression's result.
#[derive(Clone, Debug)]
pub struct ComputeProgram {
    /// Program variable -> attribute path.
    pub variable_mapping: BTreeMap<String, String>,
    pub result_fields: Vec<String>,
    body: Expr,
}

/// Outcome of [`run_analytical`].
#[derive(Clone, Debug, PartialEq)]
pub struct AnalyticalRun {
    pub collection: FeatureCollection,
    /// Features skipped because an input was absent, null or NaN.
    pub missing_inputs: usize,
    /// Result values written as null because they were NaN or infinite.
    pub non_finite_outputs: usize,
}

impl ComputeProgram {
    pub fn new<'a>(
        source: &str,
        mapping: impl IntoIterator<Item = (&'a str, &'a str)>,
        result_fields: impl IntoIterator<Item = &'a str>,
    ) -> Result<ComputeProgram, ComputeError> {
        let body = parse_expression(source)?;
        let variable_mapping: BTreeMap<String, String> = mapping
            .into_iter()
            .map(|(v, a)| (v.to_owned(), a.to_owned()))
            .collect();
        if let Some(free) = body
            .variables()
            .into_iter()
            .find(|v| !variable_mapping.contains_key(v))
        {
            return Err(CompileError::UnboundVariable(free).into());
        }
        let result_fields: Vec<String> = result_fields.into_iter().map(str::to_owned).collect();
        if result_fields.is_empty() {
            return Err(ComputeError::ArityMismatch {
                expected: 0,
                found: 1,
            });
        }
        if let Some(bad) = result_fields.iter().find(|f| !crate::model::valid_path(f)) {
            return Err(ComputeError::InvalidResultField(bad.clone()));
        }
        Ok(ComputeProgram {
            variable_mapping,
            result_fields,
            body,
        })
    }

    pub fn body(&self) -> &Expr {
        &self.body
    }

    /// Type-checks the body with variable types taken from the first
    /// feature that has a non-null value for each mapped attribute.
    pub fn compile_for(&self, collection: &FeatureCollection) -> Result<Expression, ComputeError> {
        let mut types = BTreeMap::new();
        for (var, attr) in &self.variable_mapping {
            let mut ty = Type::Scalar;
            if let Some((f, v)) = collection.features().iter().find_map(|f| {
                get_path(&f.attributes, attr)
                    .filter(|v| !v.is_null())
                    .map(|v| (f, v))
            }) {
                ty = value_type(v).ok_or_else(|| ComputeError::TypeMismatch {
                    feature: f.id,
                    variable: var.clone(),
                    found: v.type_name(),
                })?;
            }
            types.insert(var.clone(), ty);
        }
        let expr = compile_parsed(&self.body, &types)?;
        let arity = expr.result_type().arity();
        if arity != self.result_fields.len() {
            return Err(ComputeError::ArityMismatch {
                expected: self.result_fields.len(),
                found: arity,
            });
        }
        Ok(expr)
    }
}

fn value_type(v: &AttributeValue) -> Option<Type> {
    match v {
        AttributeValue::Number(_) => Some(Type::Scalar),
        AttributeValue::Bool(_) => Some(Type::Bool),
        AttributeValue::Array(_) => Some(Type::Array),
        _ => None,
    }
}

enum Row {
    Missing,
    Done(Attributes, usize),
}

/// [`run_analytical_with`] in the default execution mode.
pub fn run_analytical(
    collection: &FeatureCollection,
    program: &ComputeProgram,
) -> Result<AnalyticalRun, ComputeError> {
    run_analytical_with(ExecMode::default(), collection, program)
}

/// Evaluates the program once per feature and writes its results back.
/// Features with an absent, null or NaN input get null in every result
/// field. A value of the wrong type is an error.
pub fn run_analytical_with(
    mode: ExecMode,
    collection: &FeatureCollection,
    program: &ComputeProgram,
) -> Result<AnalyticalRun, ComputeError> {
    let expr = program.compile_for(collection)?;
    let slots: Vec<(&String, &String)> = expr
        .variables()
        .iter()
        .map(|v| (v, &program.variable_mapping[v]))
        .collect();
    let fields = &program.result_fields;

    let rows: Vec<Result<Row, ComputeError>> = exec::map_slice(mode, collection.features(), |f| {
        let mut bindings = Vec::with_capacity(slots.len());
        for (var, attr) in &slots {
            let value = match get_path(&f.attributes, attr) {
                None | Some(AttributeValue::Null) => return Ok(Row::Missing),
                Some(AttributeValue::Number(v)) if v.is_nan() => return Ok(Row::Missing),
                Some(AttributeValue::Array(a)) if a.iter().any(|v| v.is_nan()) => {
                    return Ok(Row::Missing)
                }
                Some(AttributeValue::Number(v)) => Value::Scalar(*v),
                Some(AttributeValue::Bool(b)) => Value::Bool(*b),
                Some(AttributeValue::Array(a)) => Value::Array(a),
                Some(other) => {
                    return Err(ComputeError::TypeMismatch {
                        feature: f.id,
                        variable: (*var).clone(),
                        found: other.type_name(),
                    })
                }
            };
            bindings.push(value);
        }
        let results = match expr.eval(&bindings) {
            Value::Tuple(items) => items,
            single => vec![single],
        };
        let mut update = Attributes::new();
        let mut non_finite = 0;
        for (field, value) in fields.iter().zip(results) {
            let out = match value {
                Value::Scalar(v) if v.is_finite() => AttributeValue::Number(v),
                Value::Bool(b) => AttributeValue::Bool(b),
                Value::Array(a) if a.iter().all(|v| v.is_finite()) => {
                    AttributeValue::Array(a.to_vec())
                }
                _ => {
                    non_finite += 1;
                    AttributeValue::Null
                }
            };
            update.insert(field.clone(), out);
        }
        Ok(Row::Done(update, non_finite))
    });

    let mut missing_inputs = 0;
    let mut non_finite_outputs = 0;
    let mut updates = Vec::with_capacity(rows.len());
    for row in rows {
        updates.push(Some(match row? {
            Row::Missing => {
                missing_inputs += 1;
                fields
                    .iter()
                    .map(|f| (f.clone(), AttributeValue::Null))
                    .collect()
            }
            Row::Done(update, bad) => {
                non_finite_outputs += bad;
                update
            }
        }));
    }
    Ok(AnalyticalRun {
        collection: collection.merge_rows(updates)?,
        missing_inputs,
        non_finite_outputs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attrs;
    use crate::model::{Crs, FeatureId, Geometry, RawFeature};

    fn collection(rows: Vec<Attributes>) -> FeatureCollection {
        let raw = rows
            .into_iter()
            .enumerate()
            .map(|(i, a)| RawFeature::new(Geometry::point(Crs::Mercator, i as f64, 0.0), a))
            .collect();
        FeatureCollection::new("c", Crs::Mercator, raw).unwrap()
    }

    #[test]
    fn volume() {
        let c = collection(vec![attrs! {"area" => 100.0, "height" => 20.0}]);
        let p = ComputeProgram::new("x * y", [("x", "area"), ("y", "height")], ["volume"]).unwrap();
        let run = run_analytical(&c, &p).unwrap();
        assert_eq!(
            run.collection.features()[0].attributes["volume"],
            AttributeValue::Number(2000.0)
        );
        assert_eq!(run.missing_inputs, 0);
    }

    #[test]
    fn linfit_two_outputs() {
        let c = collection(vec![attrs! {
            "hours" => vec![0.0, 1.0, 2.0, 3.0, 4.0],
            "temps" => vec![1.0, 3.0, 5.0, 7.0, 9.0],
        }]);
        let p = ComputeProgram::new(
            "linfit(xs, ys)",
            [("xs", "hours"), ("ys", "temps")],
            ["trend.slope", "trend.b"],
        )
        .unwrap();
        let out = run_analytical(&c, &p).unwrap().collection;
        let a = &out.features()[0].attributes;
        let slope = crate::model::get_number(a, "trend.slope").unwrap();
        let b = crate::model::get_number(a, "trend.b").unwrap();
        assert!((slope - 2.0).abs() < 1e-12 && (b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn missing_nan_and_division() {
        let c = collection(vec![
            attrs! {"v" => vec![1.0, f64::NAN]},
            attrs! {},
            attrs! {"v" => vec![1.0, 2.0]},
        ]);
        let p = ComputeProgram::new("mean(ys)", [("ys", "v")], ["m"]).unwrap();
        let run = run_analytical(&c, &p).unwrap();
        assert_eq!(run.missing_inputs, 2);
        let m: Vec<_> = run
            .collection
            .features()
            .iter()
            .map(|f| f.attributes["m"].clone())
            .collect();
        assert_eq!(
            m,
            vec![
                AttributeValue::Null,
                AttributeValue::Null,
                AttributeValue::Number(1.5)
            ]
        );

        let c = collection(vec![attrs! {"x" => 0.0}]);
        let p = ComputeProgram::new("x / x", [("x", "x")], ["r"]).unwrap();
        let run = run_analytical(&c, &p).unwrap();
        assert_eq!(run.non_finite_outputs, 1);
        assert_eq!(
            run.collection.features()[0].attributes["r"],
            AttributeValue::Null
        );
    }

    #[test]
    fn type_mismatch_and_arity() {
        let c = collection(vec![attrs! {"x" => 1.0}, attrs! {"x" => "tall"}]);
        let p = ComputeProgram::new("x + 1", [("x", "x")], ["y"]).unwrap();
        assert_eq!(
            run_analytical(&c, &p).unwrap_err(),
            ComputeError::TypeMismatch {
                feature: FeatureId(1),
                variable: "x".into(),
                found: "text"
            }
        );
        let p = ComputeProgram::new("(x, x)", [("x", "x")], ["y"]).unwrap();
        assert_eq!(
            run_analytical(&c, &p).unwrap_err(),
            ComputeError::ArityMismatch {
                expected: 1,
                found: 2
            }
        );
        assert!(matches!(
            ComputeProgram::new("x + z", [("x", "x")], ["y"]),
            Err(ComputeError::Compile(CompileError::UnboundVariable(_)))
        ));
    }
}
