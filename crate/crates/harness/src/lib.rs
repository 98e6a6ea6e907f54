//! Benchmark families, the brute-force oracle and the experiment driver used
//! by the `privdcsp` command-line tool.

pub mod experiment;
pub mod gen;
pub mod oracle;
pub mod stats;
