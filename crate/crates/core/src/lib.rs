pub mod capacity;
pub mod channels;
pub mod error;
pub mod experiments;
pub mod io;
pub mod processes;
pub mod tensor;
