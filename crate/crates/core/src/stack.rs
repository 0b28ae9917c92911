// SPDX-License-Identifier: Apache-2.0

//! Every recursive pass over terms runs through [`guard`], so deeply nested
//! programs (long let chains, fold expansions) grow the stack on demand
//! instead of overflowing it.

const RED_ZONE: usize = 128 * 1024;
const GROW_BY: usize = 8 * 1024 * 1024;

#[inline]
pub fn guard<R>(f: impl FnOnce() -> R) -> R {
    stacker::maybe_grow(RED_ZONE, GROW_BY, f)
}
