//! Battery evaluation fanned out across sequences with rayon. Aggregation is
//! in sequence order, so reports do not depend on the thread count.

use rayon::prelude::*;
use thermrng_core::bits::BitString;
use thermrng_core::stattests::{Battery, BatteryConfig, BatteryReport, BitSequence};

use crate::AppError;

/// Splits `bits` into `count` consecutive sequences of `length` bits and runs the battery.
pub fn run_battery_on_stream(
    bits: &BitString,
    count: usize,
    length: usize,
    config: &BatteryConfig,
) -> Result<BatteryReport, AppError> {
    if count == 0 || length == 0 {
        return Err(AppError::Usage("sequence count and length must be positive".into()));
    }
    let needed = count
        .checked_mul(length)
        .ok_or_else(|| AppError::Usage("sequence count × length overflows".into()))?;
    if bits.len() < needed {
        return Err(AppError::Usage(format!(
            "battery needs {count} × {length} = {needed} bits, input has {}",
            bits.len()
        )));
    }
    let battery = Battery::new(config.clone(), length)?;
    let outcomes = (0..count)
        .into_par_iter()
        .map(|i| battery.evaluate(&bits.slice(i * length, length)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(battery.aggregate(&outcomes)?)
}

/// Parallel counterpart of `thermrng_core::stattests::run_battery`.
pub fn run_battery(sequences: &[BitSequence], config: &BatteryConfig) -> Result<BatteryReport, AppError> {
    let Some(first) = sequences.first() else {
        return Err(AppError::Usage("battery needs at least one sequence".into()));
    };
    if sequences.iter().any(|s| s.len() != first.len()) {
        return Err(thermrng_core::Error::Contract("mixed sequence lengths".into()).into());
    }
    let battery = Battery::new(config.clone(), first.len())?;
    let outcomes = sequences
        .par_iter()
        .map(|s| battery.evaluate(s))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(battery.aggregate(&outcomes)?)
}
