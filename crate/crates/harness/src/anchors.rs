//! Inequality ids and the equation labels they check.
//!
//! Anchor strings are the labels of the displayed formulas, with a roman
//! numeral for multi-line displays. Several ids may share an anchor; each id
//! has exactly one.

pub const ANCHORS: &[(&str, &str)] = &[
    ("formula.bounded.gradient", "funzionegradiente"),
    ("formula.bounded.hessian", "funzionederseconde"),
    ("formula.bounded.third", "funzionederterze"),
    ("formula.c1.gradient", "derivataT(t)f"),
    ("formula.c1.hessian", "derivatasecondaT(t)f"),
    ("formula.c1.third", "derivataterzaT(t)f"),
    ("closed.semigroup.linear", "OU"),
    ("closed.semigroup.quadratic", "OU"),
    ("closed.resolvent.constant", "risolvente"),
    ("closed.resolvent.linear", "risolvente"),
    ("closed.resolvent.quadratic", "risolvente"),
    ("closed.mild.homogeneous", "v"),
    ("closed.mild.unit_source", "v"),
    ("closed.mild.linear_source", "v"),
    ("closed.mild.quadratic_hessian", "v"),
    ("closed.mild.initial_value", "Cauchy"),
    ("closed.cameron_martin", "CM"),
    ("closed.hat_moment", "legge"),
    ("smoothing.sup", "stimasup"),
    ("smoothing.bounded.gradient", "stimagradienteH(i)"),
    ("smoothing.bounded.hessian", "stimagradienteH(ii)"),
    ("smoothing.bounded.third", "stimagradienteH(iii)"),
    ("smoothing.c1.gradient", "stimederivate(i)"),
    ("smoothing.c1.hessian", "stimederivate(ii)"),
    ("smoothing.c1.third", "stimederivate(iii)"),
    ("smoothing.holder", "sgralpha"),
    ("smoothing.grad_holder", "gradsgralpha"),
    ("smoothing.grad_holder_bounded", "gradsgrzeroalpha"),
    ("smoothing.grad_holder_bounded.with_decay", "gradsgrzeroalpha"),
    ("smoothing.contraction.k0", "sgrkalpha"),
    ("smoothing.contraction.k1", "sgrkalpha"),
    ("smoothing.contraction.k2", "sgrkalpha"),
    ("smoothing.holder_data.gradient", "stimagradientealpha"),
    ("smoothing.holder_data.hessian", "stimaderivatealpha(i)"),
    ("smoothing.holder_data.third", "stimaderivatealpha(ii)"),
    ("schauder.sup", "stimasup_res"),
    ("schauder.gradient", "Schauder0(i)"),
    ("schauder.hessian", "Schauder0(ii)"),
    ("schauder.hessian_holder", "Schauder"),
    ("schauder.split.head", "a,b"),
    ("schauder.split.tail", "a,b"),
    ("schauder.quadratic_hessian", "D^2u"),
    ("zygmund.gradient", "Zygmund"),
    ("zygmund.split.head", "a,b"),
    ("zygmund.split.head.integrated", "a,b"),
    ("zygmund.split.tail", "a,b"),
    ("zygmund.affine", "condZygmund"),
    ("parabolic.initial_norm", "Schauderevol"),
    ("parabolic.norm_ratio", "Schauderevol"),
    ("parabolic.constant", "Schauderevol"),
    ("interpolation.multiplicative", "interp(ii)"),
    ("interpolation.multiplicative.minimized", "interp(ii)"),
    ("interpolation.k_functional", "interp(i)"),
    ("interpolation.k_refinement", "interp(i)"),
    ("identity.semigroup_law", "OU"),
    ("identity.resolvent", "risolvente"),
    ("identity.resolvent_equation", "eq_risolvente"),
    ("degeneracy.kernel_quotient_ratio", "OU"),
    ("degeneracy.range_gradient", "stimagradienteH(i)"),
];

/// Labels that a full run must cover.
pub const IN_SCOPE: &[&str] = &[
    "eq_risolvente",
    "Cauchy",
    "v",
    "CM",
    "legge",
    "OU",
    "risolvente",
    "stimasup",
    "stimasup_res",
    "funzionegradiente",
    "funzionederseconde",
    "funzionederterze",
    "stimagradienteH",
    "derivataT(t)f",
    "derivatasecondaT(t)f",
    "derivataterzaT(t)f",
    "stimederivate",
    "sgrkalpha",
    "sgralpha",
    "gradsgralpha",
    "gradsgrzeroalpha",
    "stimagradientealpha",
    "stimaderivatealpha",
    "Schauder0",
    "Schauder",
    "D^2u",
    "a,b",
    "condZygmund",
    "Zygmund",
    "Schauderevol",
    "interp",
];

pub fn anchor_of(id: &str) -> Option<&'static str> {
    ANCHORS.iter().find(|(i, _)| *i == id).map(|(_, a)| *a)
}

/// `stimagradienteH(ii)` → `stimagradienteH`.
pub fn base_label(anchor: &str) -> &str {
    match anchor.find('(') {
        Some(i) if anchor.ends_with(')') => &anchor[..i],
        _ => anchor,
    }
}
