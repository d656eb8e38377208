/// Exception names a script may raise or catch. `Exception` catches all.
pub const EXCEPTION_NAMES: &[&str] = &[
    "Exception",
    "RuntimeError",
    "ValueError",
    "TypeError",
    "IndexError",
    "ZeroDivisionError",
    "MotionException",
    "CollisionError",
    "GripperMismatch",
    "GraspFault",
    "StateError",
];

/// Builtin functions with their accepted argument counts (`None` = variadic).
pub const BUILTIN_FUNCTIONS: &[(&str, usize, Option<usize>)] = &[
    ("len", 1, Some(1)),
    ("str", 1, Some(1)),
    ("abs", 1, Some(1)),
    ("min", 2, None),
    ("max", 2, None),
    ("random_uniform", 2, Some(2)),
    ("pose", 6, Some(6)),
    ("translation", 3, Some(3)),
];

pub fn is_exception(name: &str) -> bool {
    EXCEPTION_NAMES.contains(&name)
}

pub fn builtin_arity(name: &str) -> Option<(usize, Option<usize>)> {
    if is_exception(name) {
        return Some((0, Some(1)));
    }
    BUILTIN_FUNCTIONS.iter().find(|(n, ..)| *n == name).map(|&(_, lo, hi)| (lo, hi))
}
