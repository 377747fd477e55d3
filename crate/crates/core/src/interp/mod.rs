//! Programs, values and the interpreter for the string and bit-vector DSLs.

pub mod eval;
pub mod program;
pub mod semantics;
pub mod task;
pub mod value;

pub use eval::{evaluate, output_signature, Evaluator};
pub use program::Program;
pub use task::{Domain, Env, Signature, Task};
pub use value::{Sort, Value};
