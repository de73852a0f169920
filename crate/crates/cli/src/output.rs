//! CSV and JSON renderings of curve tables.

use std::io::Write;

use compfade::curves::CurveTable;

use crate::settings::Format;

/// `x,value` rows followed by `#atom,location,mass` trailer rows.
pub fn write_csv<W: Write + ?Sized>(w: &mut W, t: &CurveTable) -> std::io::Result<()> {
    writeln!(w, "x,value")?;
    for (x, v) in t.abscissae.iter().zip(&t.values) {
        writeln!(w, "{x:.16e},{v:.16e}")?;
    }
    for a in &t.atoms {
        writeln!(w, "#atom,{:.16e},{:.16e}", a.location, a.mass)?;
    }
    Ok(())
}

pub fn write_table<W: Write + ?Sized>(
    w: &mut W,
    t: &CurveTable,
    format: Format,
) -> std::io::Result<()> {
    match format {
        Format::Csv => write_csv(w, t),
        Format::Json => {
            serde_json::to_writer_pretty(&mut *w, t)?;
            writeln!(w)
        }
    }
}
