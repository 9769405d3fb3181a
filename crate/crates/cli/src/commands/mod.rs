pub mod count;
pub mod dimension;
pub mod expand;
pub mod verify;
