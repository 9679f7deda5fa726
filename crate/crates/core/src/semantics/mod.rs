//! Dense and sampled traces, sampling, and the reference evaluators.

mod eval;
mod io;
mod trace;

pub use eval::{eval_ltl_sampled, eval_mtl_dense, EvalError, Verdict};
pub use io::{read_trace_jsonl, write_trace_jsonl, TraceFile, TraceHeader, TraceIoError};
pub use trace::{sample_dense, Assignment, DenseTrace, SampledTrace, Segment, TraceError};
