/// Test statistics are reported with three decimals.
pub fn format_statistic(x: f64) -> String {
    format!("{x:.3}")
}

/// Four significant figures; scientific notation below 1e-3.
pub fn format_p_value(p: f64) -> String {
    if p == 0.0 {
        return "0".to_string();
    }
    if p < 1e-3 {
        return format!("{p:.3e}");
    }
    let decimals = (3 - p.log10().floor() as i32).max(0) as usize;
    format!("{p:.decimals$}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats() {
        assert_eq!(format_statistic(38.254_86), "38.255");
        assert_eq!(format_p_value(1.586_2e-7), "1.586e-7");
        assert_eq!(format_p_value(0.048_917_7), "0.04892");
        assert_eq!(format_p_value(1.0), "1.000");
        assert_eq!(format_p_value(0.204_977), "0.2050");
        assert_eq!(format_p_value(0.0), "0");
    }
}
