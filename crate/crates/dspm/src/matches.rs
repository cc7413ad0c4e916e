//! `matches.csv`: one row per (source superpixel, run, scale), sorted by
//! source superpixel then run, distances printed with six decimals.

use std::io::{Read, Write};

use dspm_core::search::sort_records;
use dspm_core::MatchRecord;

pub const HEADER: [&str; 6] = ["src_sp", "run", "lib_image", "lib_sp", "scale", "distance"];

pub fn write_matches<W: Write>(out: W, records: &[MatchRecord]) -> csv::Result<()> {
    let mut sorted = records.to_vec();
    sort_records(&mut sorted);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in &sorted {
        w.write_record([
            r.src_superpixel.to_string(),
            r.run.to_string(),
            r.lib_image.to_string(),
            r.lib_superpixel.to_string(),
            r.scale.to_string(),
            format!("{:.6}", r.distance),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a file written by [`write_matches`]. The interface flag is not
/// stored and reads back as `false`.
pub fn read_matches<R: Read>(input: R) -> Result<Vec<MatchRecord>, String> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers().map_err(|e| e.to_string())?;
    if header.iter().ne(HEADER) {
        return Err(format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()));
    }
    let mut out = Vec::new();
    for (line, row) in rd.records().enumerate() {
        let row = row.map_err(|e| e.to_string())?;
        let bad = |field: &str| format!("row {}: bad {field}", line + 2);
        let int = |i: usize| row[i].parse::<usize>().map_err(|_| bad(HEADER[i]));
        let real =
            |i: usize| row[i].parse::<f64>().ok().filter(|v| v.is_finite() && *v >= 0.0).ok_or_else(|| bad(HEADER[i]));
        out.push(MatchRecord {
            src_superpixel: int(0)?,
            run: int(1)?,
            lib_image: int(2)?,
            lib_superpixel: int(3)?,
            scale: real(4)?,
            distance: real(5)?,
            interfaces_absent: false,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(src: usize, run: usize, d: f64) -> MatchRecord {
        MatchRecord {
            src_superpixel: src,
            run,
            lib_image: 1,
            lib_superpixel: 7,
            scale: 50.0,
            distance: d,
            interfaces_absent: false,
        }
    }

    #[test]
    fn writes_sorted_rows() {
        let mut buf = Vec::new();
        write_matches(&mut buf, &[rec(1, 0, 0.25), rec(0, 1, 1.0 / 3.0), rec(0, 0, 2.0)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "src_sp,run,lib_image,lib_sp,scale,distance\n0,0,1,7,50,2.000000\n0,1,1,7,50,0.333333\n1,0,1,7,50,0.250000\n"
        );
        let back = read_matches(text.as_bytes()).unwrap();
        assert_eq!(back[1].distance, 0.333333);
        assert_eq!(back[2], rec(1, 0, 0.25));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(read_matches("a,b\n1,2\n".as_bytes()).is_err());
        assert!(read_matches("src_sp,run,lib_image,lib_sp,scale,distance\n0,0,0,0,50,-1\n".as_bytes()).is_err());
        assert!(read_matches("src_sp,run,lib_image,lib_sp,scale,distance\n0,x,0,0,50,1\n".as_bytes()).is_err());
    }
}
