//! Gnuplot script generation for trace CSVs.

use std::fmt::Write as _;

use crate::trace_csv::{require_columns, FormatError};

/// Columns the generated script refers to.
pub const PLOT_COLUMNS: [&str; 9] = ["t", "Vo", "e", "e2", "iL1", "iL2", "d1", "d2", "R"];

fn quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', "''"))
}

/// Build a four-panel gnuplot script for the CSV at `csv_path` with the given header.
///
/// Panels: output voltage with its reference, per-unit current difference,
/// inductor currents, duty cycles. Columns are addressed by header name.
pub fn emit_plot_script(csv_path: &str, header: &[String]) -> Result<String, FormatError> {
    require_columns(header, &PLOT_COLUMNS)?;
    let data = quote(csv_path);
    let title = std::path::Path::new(csv_path)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| csv_path.to_string());

    let mut s = String::new();
    let _ = writeln!(s, "# gnuplot script for {csv_path}");
    let _ = writeln!(s, "# usage: gnuplot -p <this file>");
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set datafile columnheaders");
    let _ = writeln!(s, "data = {data}");
    let _ = writeln!(s, "set grid");
    let _ = writeln!(s, "set xlabel 'time (s)'");
    let _ = writeln!(s, "set multiplot layout 2,2 title {}", quote(&title));
    s.push('\n');

    let _ = writeln!(s, "set title 'Output voltage'");
    let _ = writeln!(s, "set ylabel 'V'");
    let _ = writeln!(
        s,
        "plot data using (column('t')):(column('Vo')) with lines lw 2 title 'V_o', \\\n     \
         data using (column('t')):(column('Vo') + column('e')) with lines dt 2 title 'V_{{ref}}'"
    );
    s.push('\n');

    let _ = writeln!(s, "set title 'Per-unit current difference'");
    let _ = writeln!(s, "set ylabel 'i_{{L1}}/I_{{1m}} - i_{{L2}}/I_{{2m}}'");
    let _ = writeln!(
        s,
        "plot data using (column('t')):(column('e2')) with lines lw 2 title 'e_2'"
    );
    s.push('\n');

    let _ = writeln!(s, "set title 'Inductor currents'");
    let _ = writeln!(s, "set ylabel 'A'");
    let _ = writeln!(
        s,
        "plot data using (column('t')):(column('iL1')) with lines title 'i_{{L1}}', \\\n     \
         data using (column('t')):(column('iL2')) with lines title 'i_{{L2}}'"
    );
    s.push('\n');

    let _ = writeln!(s, "set title 'Duty cycles and load'");
    let _ = writeln!(s, "set ylabel 'duty'");
    let _ = writeln!(s, "set y2label 'R (ohm)'");
    let _ = writeln!(s, "set y2tics");
    let _ = writeln!(
        s,
        "plot data using (column('t')):(column('d1')) with lines title 'd_1', \\\n     \
         data using (column('t')):(column('d2')) with lines title 'd_2', \\\n     \
         data using (column('t')):(column('R')) axes x1y2 with steps dt 3 title 'R'"
    );
    s.push('\n');
    let _ = writeln!(s, "unset multiplot");
    Ok(s)
}
