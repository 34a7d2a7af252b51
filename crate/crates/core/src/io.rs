//! CSV formats for detections, tracks and ground truth.
//!
//! Detections: `frame,ignored_id,x,y,w,h,score[,f...]`, no header. Extra
//! trailing columns become [`Detection::extra`].
//! Tracks and ground truth: `frame,id,x,y,w,h[,...]`, no header; trailing
//! columns are ignored on input.

use std::fs::File;
use std::io::{BufRead, BufWriter, Read, Write};
use std::path::Path;

use crate::detection::{BBox, Detection};
use crate::error::{Error, Result};
use crate::metrics::FrameBoxes;
use crate::online::TrackPoint;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn reader(input: impl Read) -> csv::Reader<impl Read> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(input)
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, line: usize, what: &str) -> Result<T> {
    let raw = rec.get(i).ok_or_else(|| Error::Parse {
        line,
        message: format!("missing column {what}"),
    })?;
    raw.parse().map_err(|_| Error::Parse {
        line,
        message: format!("cannot read {what} from {raw:?}"),
    })
}

fn finite(v: f64, line: usize, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Parse {
            line,
            message: format!("{what} is not finite"),
        })
    }
}

fn record_line(rec: &csv::StringRecord) -> usize {
    rec.position().map_or(0, |p| p.line() as usize)
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

fn parse_detection(rec: &csv::StringRecord, line: usize) -> Result<Detection> {
    if rec.len() < 7 {
        return Err(Error::Parse {
            line,
            message: format!("expected at least 7 columns, found {}", rec.len()),
        });
    }
    let frame: i64 = field(rec, 0, line, "frame")?;
    let mut v = [0.0; 5];
    for (k, name) in ["x", "y", "w", "h", "score"].iter().enumerate() {
        v[k] = finite(field(rec, k + 2, line, name)?, line, name)?;
    }
    let mut det = Detection::new(frame, 0, BBox::new(v[0], v[1], v[2], v[3]), v[4]);
    for i in 7..rec.len() {
        det.extra.push(finite(field(rec, i, line, "extra feature")?, line, "extra feature")?);
    }
    det.validate().map_err(|e| Error::Parse {
        line,
        message: e.to_string(),
    })?;
    Ok(det)
}

/// Reads detections, sorted by frame; file order is kept within a frame
/// and gives the local index.
pub fn read_detections(input: impl Read) -> Result<Vec<Detection>> {
    let mut dets = Vec::new();
    for rec in reader(input).records() {
        let rec = rec.map_err(csv_error)?;
        dets.push(parse_detection(&rec, record_line(&rec))?);
    }
    dets.sort_by_key(|d| d.frame);
    let mut last = None;
    let mut next = 0;
    for d in &mut dets {
        if last != Some(d.frame) {
            last = Some(d.frame);
            next = 0;
        }
        d.local_index = next;
        next += 1;
    }
    Ok(dets)
}

pub fn load_detections(path: &Path) -> Result<Vec<Detection>> {
    read_detections(File::open(path).map_err(io_err(path))?)
}

/// Reads `frame,id,x,y,w,h` rows.
pub fn read_frame_boxes(input: impl Read) -> Result<FrameBoxes> {
    let mut out = FrameBoxes::new();
    for rec in reader(input).records() {
        let rec = rec.map_err(csv_error)?;
        let line = record_line(&rec);
        if rec.len() < 6 {
            return Err(Error::Parse {
                line,
                message: format!("expected at least 6 columns, found {}", rec.len()),
            });
        }
        let frame: i64 = field(&rec, 0, line, "frame")?;
        let id: u64 = field(&rec, 1, line, "id")?;
        let mut v = [0.0; 4];
        for (k, name) in ["x", "y", "w", "h"].iter().enumerate() {
            v[k] = finite(field(&rec, k + 2, line, name)?, line, name)?;
        }
        let b = BBox::new(v[0], v[1], v[2], v[3]);
        if !b.is_valid() {
            return Err(Error::Parse {
                line,
                message: "box must have positive width and height".into(),
            });
        }
        let rows = out.entry(frame).or_default();
        if rows.iter().any(|(other, _)| *other == id) {
            return Err(Error::Parse {
                line,
                message: format!("id {id} appears twice in frame {frame}"),
            });
        }
        rows.push((id, b));
    }
    Ok(out)
}

pub fn load_frame_boxes(path: &Path) -> Result<FrameBoxes> {
    read_frame_boxes(File::open(path).map_err(io_err(path))?)
}

/// Formats like C's `%g` with six significant digits.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if !(-4..6).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (5 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn box_fields(b: &BBox) -> [String; 4] {
    [fmt_num(b.x), fmt_num(b.y), fmt_num(b.w), fmt_num(b.h)]
}

/// Writes tracks sorted by frame, then track id.
pub fn write_tracks(rows: &[TrackPoint], out: impl Write) -> std::io::Result<()> {
    let mut rows = rows.to_vec();
    rows.sort_by_key(|r| (r.frame, r.track_id));
    let mut w = BufWriter::new(out);
    for r in &rows {
        let [x, y, bw, bh] = box_fields(&r.bbox);
        writeln!(w, "{},{},{x},{y},{bw},{bh}", r.frame, r.track_id)?;
    }
    w.flush()
}

pub fn write_frame_boxes(boxes: &FrameBoxes, out: impl Write) -> std::io::Result<()> {
    let mut w = BufWriter::new(out);
    for (t, rows) in boxes {
        let mut rows = rows.clone();
        rows.sort_by_key(|(id, _)| *id);
        for (id, b) in rows {
            let [x, y, bw, bh] = box_fields(&b);
            writeln!(w, "{t},{id},{x},{y},{bw},{bh}")?;
        }
    }
    w.flush()
}

pub fn write_detections(dets: &[Detection], out: impl Write) -> std::io::Result<()> {
    let mut w = BufWriter::new(out);
    for d in dets {
        let [x, y, bw, bh] = box_fields(&d.bbox);
        write!(w, "{},-1,{x},{y},{bw},{bh},{}", d.frame, fmt_num(d.score))?;
        for e in &d.extra {
            write!(w, ",{}", fmt_num(*e))?;
        }
        writeln!(w)?;
    }
    w.flush()
}

/// Converts track points to the boxes-per-frame form used by evaluation.
pub fn tracks_to_boxes(rows: &[TrackPoint]) -> FrameBoxes {
    let mut out = FrameBoxes::new();
    for r in rows {
        out.entry(r.frame).or_default().push((r.track_id, r.bbox));
    }
    out
}

/// Reads blank-line separated frame blocks from a stream.
pub struct FrameBlocks<R> {
    input: R,
    line: usize,
    done: bool,
}

impl<R: BufRead> FrameBlocks<R> {
    pub fn new(input: R) -> Self {
        Self {
            input,
            line: 0,
            done: false,
        }
    }

    /// Next non-empty block as `(frame, detections)`, or `None` at the end.
    pub fn next_block(&mut self) -> Result<Option<(i64, Vec<Detection>)>> {
        let mut dets: Vec<Detection> = Vec::new();
        let mut buf = String::new();
        while !self.done {
            buf.clear();
            let n = self.input.read_line(&mut buf).map_err(|source| Error::Io {
                path: "<stdin>".into(),
                source,
            })?;
            if n == 0 {
                self.done = true;
                break;
            }
            self.line += 1;
            let text = buf.trim();
            if text.starts_with('#') {
                continue;
            }
            if text.is_empty() {
                if dets.is_empty() {
                    continue;
                }
                break;
            }
            let mut rdr = reader(text.as_bytes());
            let rec = match rdr.records().next() {
                Some(r) => r.map_err(|e| Error::Parse {
                    line: self.line,
                    message: e.to_string(),
                })?,
                None => continue,
            };
            let mut det = parse_detection(&rec, self.line)?;
            if let Some(first) = dets.first() {
                if first.frame != det.frame {
                    return Err(Error::Parse {
                        line: self.line,
                        message: format!("frame {} inside the block of frame {}", det.frame, first.frame),
                    });
                }
            }
            det.local_index = dets.len();
            dets.push(det);
        }
        Ok(dets.first().map(|d| d.frame).map(|t| (t, dets)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_a_detection_line() {
        let d = read_detections("0,-1,10,20,30,40,0.9\n".as_bytes()).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].frame, 0);
        assert_eq!(d[0].bbox, BBox::new(10.0, 20.0, 30.0, 40.0));
        assert_eq!(d[0].score, 0.9);
    }

    #[test]
    fn empty_input_is_valid() {
        assert!(read_detections("".as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn zero_width_names_the_line() {
        let err = read_detections("0,-1,1,1,2,2,1\n1,-1,1,1,0,2,1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn rejects_non_finite_and_short_rows() {
        assert!(read_detections("0,-1,1,1,2,2,nan\n".as_bytes()).is_err());
        assert!(read_detections("0,-1,1,1,2,2\n".as_bytes()).is_err());
        assert!(read_detections("x,-1,1,1,2,2,1\n".as_bytes()).is_err());
    }

    #[test]
    fn sorts_by_frame_and_numbers_locally() {
        let d = read_detections("2,-1,1,1,2,2,1\n0,-1,1,1,2,2,1\n2,-1,5,1,2,2,1,0.5\n".as_bytes()).unwrap();
        let keys: Vec<(i64, usize)> = d.iter().map(|d| (d.frame, d.local_index)).collect();
        assert_eq!(keys, vec![(0, 0), (2, 0), (2, 1)]);
        assert_eq!(d[2].extra, vec![0.5]);
    }

    #[test]
    fn six_significant_digits() {
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(10.0), "10");
        assert_eq!(fmt_num(1.0 / 3.0), "0.333333");
        assert_eq!(fmt_num(-123456.7), "-123457");
        assert_eq!(fmt_num(1234567.0), "1.23457e+06");
        assert_eq!(fmt_num(0.0001), "0.0001");
        assert_eq!(fmt_num(0.00001234), "1.234e-05");
        assert_eq!(fmt_num(999999.7), "1e+06");
        assert_eq!(fmt_num(2.5), "2.5");
    }

    #[test]
    fn tracks_round_trip_through_boxes() {
        let rows = vec![
            TrackPoint { frame: 1, track_id: 3, local_index: 0, bbox: BBox::new(1.5, 2.0, 3.0, 4.0) },
            TrackPoint { frame: 0, track_id: 7, local_index: 0, bbox: BBox::new(1.0, 2.0, 3.0, 4.0) },
        ];
        let mut buf = Vec::new();
        write_tracks(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text, "0,7,1,2,3,4\n1,3,1.5,2,3,4\n");
        assert_eq!(read_frame_boxes(buf.as_slice()).unwrap(), tracks_to_boxes(&rows));
    }

    #[test]
    fn duplicate_ids_in_a_frame_are_rejected() {
        assert!(read_frame_boxes("0,1,1,1,2,2\n0,1,5,5,2,2\n".as_bytes()).is_err());
    }

    #[test]
    fn frame_blocks() {
        let text = "0,-1,1,1,2,2,1\n0,-1,5,1,2,2,1\n\n\n3,-1,1,1,2,2,1\n\n4,-1,1,1,2,2,1";
        let mut blocks = FrameBlocks::new(text.as_bytes());
        let (t, d) = blocks.next_block().unwrap().unwrap();
        assert_eq!((t, d.len(), d[1].local_index), (0, 2, 1));
        assert_eq!(blocks.next_block().unwrap().unwrap().0, 3);
        assert_eq!(blocks.next_block().unwrap().unwrap().0, 4);
        assert!(blocks.next_block().unwrap().is_none());
        let mut bad = FrameBlocks::new("0,-1,1,1,2,2,1\n1,-1,1,1,2,2,1\n".as_bytes());
        assert!(matches!(bad.next_block(), Err(Error::Parse { line: 2, .. })));
    }
}
