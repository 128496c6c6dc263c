// SPDX-License-Identifier: Apache-2.0

//! Programs shared by the benchmarks.

use specleak_core::{parse_program, Policy, Program};

pub const BOUNDS_CHECK: &str = "0: x <- y < size
1: beqz x, end
2: load z, A + y
3: z <- z * 2
4: load w, B + z
5: temp <- temp & w";

pub const BOUNDS_CHECK_FENCED: &str = "0: x <- y < size
1: beqz x, end
2: spbarr
3: load z, A + y
4: z <- z * 2
5: load w, B + z
6: temp <- temp & w";

/// Two nested checks guarding the same gadget.
pub const NESTED: &str = "0: x <- y < size
1: beqz x, end
2: t <- y < 3
3: beqz t, 6
4: load z, A + y
5: load w, B + z
6: skip";

pub fn program(src: &str) -> Program {
    parse_program(src).expect("benchmark program parses")
}

pub fn policy() -> Policy {
    Policy::regs_only(&["y", "size", "A", "B"])
}

/// A straight-line chain of `n` dependent loads behind one bounds check.
pub fn load_chain(n: usize) -> Program {
    let mut src = String::from("0: x <- y < size\n1: beqz x, end\n2: z <- y");
    for i in 0..n {
        src.push_str(&format!("\n{}: load z, A + z", i + 3));
    }
    program(&src)
}
