use std::fmt;

use super::*;

/// A schema with every slot bound to a problem object.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundAction {
    pub schema: usize,
    pub name: String,
    pub args: Vec<String>,
    pub controller: ControllerId,
    /// Object bound to the controller slot.
    pub controller_arg: String,
    pub cost: CostId,
    pub success: SuccessId,
    pub pre_pos: Vec<Atom>,
    pub pre_neg: Vec<Atom>,
    pub add: Vec<Atom>,
    pub del: Vec<Atom>,
}

impl GroundAction {
    /// `name(arg1,arg2,...)` with every bound object.
    pub fn full_name(&self) -> String {
        format!("{}({})", self.name, self.args.join(","))
    }
}

impl fmt::Display for GroundAction {
    /// `name(controller_arg)`, the form used in plan listings.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.name, self.controller_arg)
    }
}

fn instantiate(lits: &[Literal], binding: &[(String, String)]) -> Vec<Atom> {
    lits.iter()
        .map(|l| Atom {
            predicate: l.predicate.clone(),
            args: l
                .args
                .iter()
                .map(|t| match t {
                    Term::Const(c) => c.clone(),
                    Term::Var(v) => binding.iter().find(|(k, _)| k == v).map(|(_, o)| o.clone()).unwrap_or_default(),
                })
                .collect(),
        })
        .collect()
}

/// Enumerates every type-consistent binding of every schema, sorted by
/// (action name, bound object names).
pub fn ground(domain: &Domain, problem: &Problem) -> Vec<GroundAction> {
    let mut out = Vec::new();
    for (si, schema) in domain.actions.iter().enumerate() {
        let candidates: Vec<Vec<&str>> = schema
            .params
            .iter()
            .map(|(_, ty)| {
                problem
                    .objects
                    .iter()
                    .filter(|(_, t)| domain.is_subtype(t, ty))
                    .map(|(o, _)| o.as_str())
                    .collect()
            })
            .collect();
        let (pos, neg): (Vec<Literal>, Vec<Literal>) = schema.pre.iter().cloned().partition(|l| l.positive);
        let total: usize = candidates.iter().map(Vec::len).product();
        for n in 0..total {
            // mixed-radix decode, last slot varies fastest
            let mut rem = n;
            let mut args = vec![String::new(); candidates.len()];
            for k in (0..candidates.len()).rev() {
                args[k] = candidates[k][rem % candidates[k].len()].to_string();
                rem /= candidates[k].len();
            }
            let binding: Vec<(String, String)> =
                schema.params.iter().map(|(v, _)| v.clone()).zip(args.iter().cloned()).collect();
            out.push(GroundAction {
                schema: si,
                name: schema.name.clone(),
                controller: schema.controller,
                controller_arg: args.get(schema.controller_param).cloned().unwrap_or_default(),
                args,
                cost: schema.cost,
                success: schema.success,
                pre_pos: instantiate(&pos, &binding),
                pre_neg: instantiate(&neg, &binding),
                add: instantiate(&schema.add, &binding),
                del: instantiate(&schema.del, &binding),
            });
        }
    }
    out.sort_by(|a, b| (&a.name, &a.args).cmp(&(&b.name, &b.args)));
    out
}
