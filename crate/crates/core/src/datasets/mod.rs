//! Dataset generators and loaders.

mod artificial;
mod csv_load;
mod digits;
pub mod idx;
pub mod pgm;

pub use artificial::{gen_artificial, gen_artificial_with, ArtificialParams};
pub use csv_load::{load_csv, CsvLoad, CsvOptions};
pub use digits::{
    gen_noisy_digits, gen_synthetic_digits, gen_synthetic_digits_with, noisy_digits_from,
    SyntheticDigitParams, DIGIT_SIDE,
};
