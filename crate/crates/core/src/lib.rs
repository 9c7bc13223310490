pub mod bounds;
pub mod dense;
pub mod experiment;
pub mod graph;
pub mod growth;
pub mod minor;
pub mod percolation;
pub mod seeds;
pub mod sprinkling;
pub mod tree;
