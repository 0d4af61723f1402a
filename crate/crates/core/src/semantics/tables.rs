//! Promotion and cast tables.
//!
//! Rows are the source kind, columns the destination kind, both in the
//! order of [`Kind::ALL`]: int, CP pointer, NP pointer, float, double,
//! vector, complex, localint.

use super::types::Kind;

const Y: bool = true;
const N: bool = false;

/// Implicit promotions.
pub const PROMOTIONS: [[bool; 8]; 8] = [
    //  int CPp NPp flt dbl vec cpx lint
    [Y, Y, Y, Y, Y, Y, Y, Y], // int
    [Y, Y, Y, N, N, N, N, N], // CP pointer
    [Y, Y, Y, N, N, N, N, N], // NP pointer
    [N, N, N, Y, Y, Y, Y, Y], // float
    [N, N, N, Y, Y, Y, Y, Y], // double
    [N, N, N, N, N, Y, N, N], // vector
    [N, N, N, N, N, N, Y, N], // complex
    [N, N, Y, Y, Y, Y, Y, Y], // localint
];

/// Explicit casts.
pub const CASTS: [[bool; 8]; 8] = [
    //  int CPp NPp flt dbl vec cpx lint
    [Y, N, N, Y, Y, Y, Y, Y], // int
    [N, Y, N, N, N, N, N, N], // CP pointer
    [N, Y, N, N, N, N, N, N], // NP pointer
    [N, N, N, Y, Y, Y, Y, N], // float
    [N, N, N, N, Y, N, N, N], // double
    [N, N, N, N, N, Y, N, N], // vector
    [N, N, N, N, N, N, Y, N], // complex
    [N, N, N, N, N, N, N, Y], // localint
];

pub fn promotion_allowed(from: Kind, to: Kind) -> bool {
    PROMOTIONS[from.index()][to.index()]
}

pub fn cast_allowed(from: Kind, to: Kind) -> bool {
    CASTS[from.index()][to.index()]
}
