use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{
    side_key, Channel, ConversationSide, Corpus, Events, FrameTrack, Gender, Splits, TagMap,
    Utterance, Word,
};
use crate::error::{Error, Result};
use crate::fsutil::{fmt_f64, read_to_string, write_atomic};

pub const METADATA_FILE: &str = "metadata.jsonl";
pub const UTTERANCE_FILE: &str = "utterances.jsonl";
pub const SPLIT_FILE: &str = "splits.json";
pub const FRAMES_DIR: &str = "frames";

#[derive(Debug, Serialize, Deserialize)]
struct SideRecord {
    conv_id: String,
    side: Channel,
    speaker_gender: Gender,
    listener_gender: Gender,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    speaker_id: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct UtteranceRecord {
    conv_id: String,
    side: Channel,
    utt_id: String,
    da_tag: String,
    start: f64,
    end: f64,
    #[serde(default)]
    words: Vec<Word>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    events: Option<Events>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    speaker_id: Option<String>,
}

pub fn frames_path(dir: &Path, conv_id: &str, side: Channel) -> PathBuf {
    dir.join(FRAMES_DIR).join(format!("{conv_id}_{side}.csv"))
}

/// Loads a corpus directory with the built-in tag grouping.
pub fn load_corpus(dir: &Path) -> Result<Corpus> {
    load_corpus_with(dir, &TagMap::builtin())
}

/// Loads `metadata.jsonl`, `utterances.jsonl`, `frames/<conv>_<side>.csv`
/// and, when present, `splits.json`, then validates every invariant.
pub fn load_corpus_with(dir: &Path, tags: &TagMap) -> Result<Corpus> {
    let meta_path = dir.join(METADATA_FILE);
    let mut sides = Vec::new();
    let mut index = BTreeMap::new();
    let meta_text = read_to_string(&meta_path)?;
    for (line_no, line) in jsonl_lines(&meta_text) {
        let rec: SideRecord = serde_json::from_str(line)
            .map_err(|e| Error::malformed(meta_path.display(), line_no, e))?;
        let key = side_key(&rec.conv_id, rec.side);
        if index.contains_key(&key) {
            return Err(Error::malformed(meta_path.display(), line_no, format!("duplicate side {key}")));
        }
        let frames = read_frames(&frames_path(dir, &rec.conv_id, rec.side))?;
        index.insert(key, sides.len());
        sides.push(ConversationSide {
            conv_id: rec.conv_id,
            side: rec.side,
            speaker_gender: rec.speaker_gender,
            listener_gender: rec.listener_gender,
            speaker_id: rec.speaker_id,
            frames,
            utterances: Vec::new(),
        });
    }

    let utt_path = dir.join(UTTERANCE_FILE);
    let utt_text = read_to_string(&utt_path)?;
    for (line_no, line) in jsonl_lines(&utt_text) {
        let rec: UtteranceRecord = serde_json::from_str(line)
            .map_err(|e| Error::malformed(utt_path.display(), line_no, e))?;
        let key = side_key(&rec.conv_id, rec.side);
        let &i = index.get(&key).ok_or_else(|| {
            Error::malformed(utt_path.display(), line_no, format!("side {key} not in metadata"))
        })?;
        let side = &mut sides[i];
        if let Some(id) = rec.speaker_id {
            match &side.speaker_id {
                Some(existing) if *existing != id => {
                    return Err(Error::malformed(
                        utt_path.display(),
                        line_no,
                        format!("speaker_id {id} conflicts with {existing} for side {key}"),
                    ))
                }
                _ => side.speaker_id = Some(id),
            }
        }
        let da_class = tags.class_of(&rec.da_tag)?.to_string();
        side.utterances.push(Utterance {
            utt_id: rec.utt_id,
            da_tag: rec.da_tag,
            da_class,
            start: rec.start,
            end: rec.end,
            words: rec.words,
            events: rec.events,
        });
    }
    for side in &mut sides {
        side.utterances
            .sort_by(|a, b| a.start.partial_cmp(&b.start).unwrap_or(std::cmp::Ordering::Equal));
    }

    let split_path = dir.join(SPLIT_FILE);
    let splits = if split_path.exists() {
        Some(Splits::read(&split_path)?)
    } else {
        None
    };
    let corpus = Corpus { sides, splits };
    corpus.validate()?;
    Ok(corpus)
}

fn jsonl_lines(text: &str) -> impl Iterator<Item = (u64, &str)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i as u64 + 1, l))
}

fn read_frames(path: &Path) -> Result<FrameTrack> {
    let file = path.display().to_string();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::malformed(&file, 1, format!("{other:?}")),
        })?;
    let headers = rdr.headers()?.clone();
    let names: Vec<&str> = headers.iter().map(str::trim).collect();
    let has_rate = match names.as_slice() {
        ["frame", "f0", "rms", "snr_cdf"] => false,
        ["frame", "f0", "rms", "snr_cdf", "rate"] => true,
        _ => {
            return Err(Error::malformed(
                &file,
                1,
                format!("expected header frame,f0,rms,snr_cdf[,rate], got {}", names.join(",")),
            ))
        }
    };
    let mut track = FrameTrack {
        rate: has_rate.then(Vec::new),
        ..Default::default()
    };
    let mut record = csv::StringRecord::new();
    while rdr.read_record(&mut record)? {
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| record.get(i).map(str::trim).unwrap_or("");
        let num = |i: usize, name: &str| -> Result<f64> {
            field(i)
                .parse::<f64>()
                .map_err(|_| Error::malformed(&file, line, format!("bad {name} value {:?}", field(i))))
        };
        let idx: usize = field(0)
            .parse()
            .map_err(|_| Error::malformed(&file, line, format!("bad frame index {:?}", field(0))))?;
        if idx != track.f0.len() {
            return Err(Error::malformed(
                &file,
                line,
                format!("frame index {idx} out of sequence (expected {})", track.f0.len()),
            ));
        }
        track.f0.push(num(1, "f0")?);
        track.rms.push(num(2, "rms")?);
        track.snr_cdf.push(num(3, "snr_cdf")?);
        if let Some(rate) = &mut track.rate {
            let v = if field(4).is_empty() { None } else { Some(num(4, "rate")?) };
            rate.push(v);
        }
    }
    track
        .validate()
        .map_err(|msg| Error::malformed(&file, 0, msg))?;
    Ok(track)
}

fn frames_csv(track: &FrameTrack) -> String {
    let mut out = String::with_capacity(track.len() * 32);
    out.push_str("frame,f0,rms,snr_cdf");
    if track.rate.is_some() {
        out.push_str(",rate");
    }
    out.push('\n');
    for i in 0..track.len() {
        let _ = write!(
            out,
            "{i},{},{},{}",
            fmt_f64(track.f0[i]),
            fmt_f64(track.rms[i]),
            fmt_f64(track.snr_cdf[i])
        );
        if let Some(rate) = &track.rate {
            out.push(',');
            if let Some(v) = rate[i] {
                out.push_str(&fmt_f64(v));
            }
        }
        out.push('\n');
    }
    out
}

/// Writes a corpus directory in the layout [`load_corpus`] reads.
pub fn write_corpus(corpus: &Corpus, dir: &Path) -> Result<()> {
    let mut meta = String::new();
    let mut utts = String::new();
    for side in &corpus.sides {
        let rec = SideRecord {
            conv_id: side.conv_id.clone(),
            side: side.side,
            speaker_gender: side.speaker_gender,
            listener_gender: side.listener_gender,
            speaker_id: side.speaker_id.clone(),
        };
        meta.push_str(&serde_json::to_string(&rec)?);
        meta.push('\n');
        for u in &side.utterances {
            let rec = UtteranceRecord {
                conv_id: side.conv_id.clone(),
                side: side.side,
                utt_id: u.utt_id.clone(),
                da_tag: u.da_tag.clone(),
                start: u.start,
                end: u.end,
                words: u.words.clone(),
                events: u.events.clone(),
                speaker_id: None,
            };
            utts.push_str(&serde_json::to_string(&rec)?);
            utts.push('\n');
        }
        write_atomic(
            &frames_path(dir, &side.conv_id, side.side),
            frames_csv(&side.frames).as_bytes(),
        )?;
    }
    write_atomic(&dir.join(METADATA_FILE), meta.as_bytes())?;
    write_atomic(&dir.join(UTTERANCE_FILE), utts.as_bytes())?;
    if let Some(splits) = &corpus.splits {
        write_atomic(&dir.join(SPLIT_FILE), splits.to_json()?.as_bytes())?;
    }
    Ok(())
}
