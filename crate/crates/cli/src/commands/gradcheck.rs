use arglab_core::net::Variant;
use arglab_core::train::{grad_check, grad_check_fixture};
use arglab_core::{Error, Result};

use crate::CommonArgs;

pub fn run(
    common: &CommonArgs,
    variant: &str,
    epsilon: f64,
    samples: usize,
    tolerance: f64,
) -> Result<()> {
    let variant: Variant = variant.parse()?;
    let seed = common.seed().unwrap_or(42);
    let (cfg, params, instance) = grad_check_fixture(variant, seed)?;
    let report = grad_check(&params, &cfg, &instance, epsilon, samples, seed)?;
    println!("{report}");
    if report.max_rel_err >= tolerance {
        return Err(Error::Numeric(format!(
            "gradient check failed: max relative error {:.3e} >= tolerance {:.1e}",
            report.max_rel_err, tolerance
        )));
    }
    println!("gradient check passed (tolerance {tolerance:.1e})");
    Ok(())
}
