//! `vizrec` subcommands, callable in-process.
//!
//! JSON output is byte-for-byte what the HTTP service answers for the same
//! session state, so scripts can switch between the two.

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use vizrec_core::emitter::{self, render, validate};
use vizrec_core::recommender::{enumerate, marked_text};
use vizrec_core::encoding::select_mark;
use vizrec_core::{
    Channel, ChannelMap, CsvOptions, Dataset, EmitOptions, FieldRef, SchemaVersion, VarType,
};

#[derive(Debug, Parser)]
#[command(name = "vizrec", version, about = "Chart recommendations for CSV files")]
pub struct Cli {
    /// Field delimiter of the input file.
    #[arg(long, global = true, default_value_t = ',')]
    pub delimiter: char,
    /// Vega-Lite schema version (v4 or v5).
    #[arg(long, global = true, default_value = "v5")]
    pub schema: SchemaVersion,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List each variable with its inferred type.
    Types {
        csv: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Questions and charts for extending the selection by one variable.
    Recommend {
        csv: PathBuf,
        #[arg(long, num_args = 1..)]
        select: Vec<String>,
        /// Type override, e.g. `YEAR=ordinal`.
        #[arg(long = "override", value_name = "VAR=TYPE")]
        overrides: Vec<String>,
        #[arg(long)]
        json: bool,
    },
    /// Write the Vega-Lite document for a channel mapping.
    Spec {
        csv: PathBuf,
        /// `channel=var[:aggregate][:timeunit]`; `*` stands for the record count.
        #[arg(long = "map", value_name = "CHANNEL=VAR", required = true)]
        maps: Vec<String>,
        #[arg(long = "override", value_name = "VAR=TYPE")]
        overrides: Vec<String>,
        /// Index into the mark list for the mapped types; 0 is the default mark.
        #[arg(long, default_value_t = 0)]
        candidate: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Single-line output.
        #[arg(long)]
        compact: bool,
    },
}

#[derive(Debug)]
pub enum CliError {
    /// Bad input: arguments, file contents, mapping. Exit code 2.
    Usage(String),
    /// Anything else. Exit code 1.
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Internal(m) => f.write_str(m),
        }
    }
}

fn usage(e: impl fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn internal(e: impl fmt::Display) -> CliError {
    CliError::Internal(e.to_string())
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Types { csv, json } => {
            let d = load(csv, cli.delimiter)?;
            if *json {
                writeln!(out, "{}", render(&d.summary(), false)).map_err(internal)
            } else {
                for v in d.variables() {
                    writeln!(out, "{}\t{}", v.name, v.inferred_type).map_err(internal)?;
                }
                Ok(())
            }
        }
        Command::Recommend {
            csv,
            select,
            overrides,
            json,
        } => {
            let d = apply_overrides(load(csv, cli.delimiter)?, overrides)?;
            let selection = select
                .iter()
                .map(|s| resolve(&d, s))
                .collect::<Result<Vec<_>, _>>()?;
            let recs = enumerate(&selection, &d).map_err(usage)?;
            if *json {
                let doc = recs.to_json(&d, EmitOptions::url(cli.schema)).map_err(internal)?;
                return writeln!(out, "{}", render(&doc, false)).map_err(internal);
            }
            if let Some(notice) = &recs.notice {
                writeln!(out, "notice: {notice}").map_err(internal)?;
            }
            for (i, g) in recs.groups.iter().enumerate() {
                writeln!(out, "{}. {}", i + 1, marked_text(&g.question)).map_err(internal)?;
                for (k, c) in g.candidates.iter().enumerate() {
                    writeln!(out, "   {}.{} {}", i + 1, k + 1, c.label()).map_err(internal)?;
                }
            }
            Ok(())
        }
        Command::Spec {
            csv,
            maps,
            overrides,
            candidate,
            out: path,
            compact,
        } => {
            let d = apply_overrides(load(csv, cli.delimiter)?, overrides)?;
            let map = build_map(&d, maps, *candidate)?;
            let spec = map.build_spec(&d).map_err(usage)?;
            let options = EmitOptions {
                schema: cli.schema,
                ..EmitOptions::default()
            };
            let doc = emitter::to_vegalite(&spec, &d, options).map_err(internal)?;
            if let Some(v) = validate(&doc).first() {
                return Err(internal(format!("emitted document is invalid: {v}")));
            }
            let mut text = render(&doc, !compact);
            text.push('\n');
            match path {
                Some(p) => std::fs::write(p, text).map_err(|e| usage(format!("{}: {e}", p.display()))),
                None => out.write_all(text.as_bytes()).map_err(internal),
            }
        }
    }
}

/// Reads a CSV file; the dataset is named after the file.
pub fn load(path: &Path, delimiter: char) -> Result<Dataset, CliError> {
    let bytes = std::fs::read(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let name = path
        .file_name()
        .map_or_else(|| "data.csv".to_string(), |n| n.to_string_lossy().into_owned());
    let options = CsvOptions {
        delimiter: delimiter as u8,
        name,
        ..CsvOptions::default()
    };
    Dataset::from_csv(&bytes, &options).map_err(|e| usage(format!("{}: {e}", path.display())))
}

/// Exact name if present, else the only case-insensitive match.
pub fn resolve(d: &Dataset, name: &str) -> Result<String, CliError> {
    if d.index_of(name).is_some() {
        return Ok(name.to_string());
    }
    let matches: Vec<&str> = d
        .variables()
        .iter()
        .map(|v| v.name.as_str())
        .filter(|v| v.eq_ignore_ascii_case(name))
        .collect();
    match matches.as_slice() {
        [one] => Ok(one.to_string()),
        _ => Err(usage(format!("unknown variable `{name}`"))),
    }
}

fn apply_overrides(mut d: Dataset, overrides: &[String]) -> Result<Dataset, CliError> {
    for o in overrides {
        let (var, t) = o
            .split_once('=')
            .ok_or_else(|| usage(format!("override `{o}` is not VAR=TYPE")))?;
        let t: VarType = t.parse().map_err(usage)?;
        let var = resolve(&d, var)?;
        d = d.override_type(&var, t).map_err(usage)?;
    }
    Ok(d)
}

/// Parses `channel=var[:aggregate][:timeunit]`.
pub fn parse_mapping(d: &Dataset, text: &str) -> Result<(Channel, FieldRef), CliError> {
    let (channel, rest) = text
        .split_once('=')
        .ok_or_else(|| usage(format!("mapping `{text}` is not CHANNEL=VAR")))?;
    let channel: Channel = channel.parse().map_err(usage)?;
    let mut parts = rest.split(':');
    let var = parts.next().unwrap_or_default();
    let mut field = if var == "*" {
        FieldRef::count()
    } else {
        FieldRef::var(resolve(d, var)?)
    };
    for modifier in parts {
        if let Ok(agg) = modifier.parse() {
            if var == "*" {
                continue;
            }
            field = field.with_aggregate(agg);
        } else {
            field = field.with_time_unit(modifier.parse().map_err(usage)?);
        }
    }
    Ok((channel, field))
}

/// Applies the mappings x and y first so gating only fails when neither is given.
pub fn build_map(d: &Dataset, maps: &[String], candidate: usize) -> Result<ChannelMap, CliError> {
    let mut pairs = maps
        .iter()
        .map(|m| parse_mapping(d, m))
        .collect::<Result<Vec<_>, _>>()?;
    pairs.sort_by_key(|(c, _)| *c);
    let mut map = ChannelMap::new();
    for (channel, field) in pairs {
        map = map.assign(channel, field, d).map_err(usage)?;
    }
    if candidate > 0 {
        let marks = select_mark(&map.positional_types(d)).map_err(usage)?;
        let mark = *marks.get(candidate).ok_or_else(|| {
            usage(format!("candidate {candidate} out of range: {} marks for these types", marks.len()))
        })?;
        map = map.with_mark(Some(mark));
    }
    Ok(map)
}
