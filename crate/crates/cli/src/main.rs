//! `apievo`: publish API revisions, derive internal representations, resolve
//! clients and convert payloads.
//!
//! Exit codes: 0 success, 1 domain error, 2 usage error.

mod failure;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use apievo_core::adl::{parse_definition, parse_syntax, validate_wellformedness, Severity};
use apievo_core::codec::{self, convert_payload, ConversionOptions, Value};
use apievo_core::registry::Registry;
use apievo_core::resolution::{resolve, ClientDefinition, Direction};
use apievo_core::revision::{diff, RevisionId};
use apievo_core::schema::{derive_internal, schema_of, Schema, TypeExpr};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use failure::Failure;

#[derive(Parser)]
#[command(name = "apievo", version, about = "Evolve APIs across revisions without breaking clients")]
struct Cli {
    /// Registry root directory.
    #[arg(long, global = true, env = "APIEVO_STORE", default_value = "apievo-store")]
    store: PathBuf,
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and check a definition file.
    Validate { file: PathBuf },
    /// Append a definition as the next revision of an API.
    Publish { api: String, file: PathBuf },
    /// Classify the changes between two revisions.
    Diff { api: String, from: RevisionId, to: RevisionId },
    /// Show the internal representation of a set of revisions.
    InternalRep {
        api: String,
        /// Revision ids such as `1,2,4-6`; defaults to the supported set.
        #[arg(long, value_parser = parse_ids)]
        supported: Option<BTreeSet<RevisionId>>,
    },
    /// Resolve a client definition against the supported revisions.
    Resolve {
        api: String,
        client: PathBuf,
        #[arg(long)]
        revision: RevisionId,
    },
    /// Convert an encoded payload between a client and the provider.
    Convert(ConvertArgs),
    /// Encode a JSON value with the schema of a definition file.
    Encode(CodecArgs),
    /// Decode a payload into a JSON value.
    Decode(CodecArgs),
    #[command(subcommand)]
    Registry(RegistryCommand),
    /// Time the customer round trip conversion.
    Bench {
        #[arg(long, default_value_t = 100_000)]
        iterations: usize,
    },
}

#[derive(Args)]
struct ConvertArgs {
    api: String,
    #[arg(long)]
    client: PathBuf,
    /// Provider revision the client was written against.
    #[arg(long)]
    revision: RevisionId,
    /// Client type name of the payload.
    #[arg(long = "type")]
    type_name: String,
    #[arg(long, value_enum)]
    direction: DirectionArg,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long = "out")]
    output: PathBuf,
    /// Client enum member to send for unknown provider members, `Enum=MEMBER`.
    #[arg(long = "enum-fallback", value_parser = parse_fallback)]
    enum_fallbacks: Vec<(String, String)>,
}

#[derive(Args)]
struct CodecArgs {
    /// Definition whose schema describes the payload.
    definition: PathBuf,
    #[arg(long = "type")]
    type_name: String,
    #[arg(long, value_enum)]
    direction: DirectionArg,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long = "out")]
    output: PathBuf,
}

#[derive(Subcommand)]
enum RegistryCommand {
    /// List APIs, supported sets and registered clients.
    Status { api: Option<String> },
    /// Replace the supported revision set.
    SetSupported {
        api: String,
        #[arg(value_parser = parse_ids)]
        revisions: BTreeSet<RevisionId>,
        /// Drop revisions even if registered clients use them.
        #[arg(long)]
        force: bool,
    },
    /// Resolve and record a client definition.
    RegisterClient {
        api: String,
        name: String,
        file: PathBuf,
        #[arg(long)]
        revision: RevisionId,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DirectionArg {
    #[value(alias = "request")]
    Req,
    #[value(alias = "response")]
    Resp,
}

impl From<DirectionArg> for Direction {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::Req => Direction::Request,
            DirectionArg::Resp => Direction::Response,
        }
    }
}

fn parse_ids(s: &str) -> Result<BTreeSet<RevisionId>, String> {
    let mut out = BTreeSet::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let num = |t: &str| t.trim().parse::<RevisionId>().map_err(|_| format!("`{t}` is not a revision id"));
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b) = (num(a)?, num(b)?);
                if a > b {
                    return Err(format!("empty range {part}"));
                }
                out.extend(a..=b);
            }
            None => {
                out.insert(num(part)?);
            }
        }
    }
    if out.is_empty() {
        return Err("no revision ids given".into());
    }
    Ok(out)
}

fn parse_fallback(s: &str) -> Result<(String, String), String> {
    match s.split_once('=') {
        Some((e, m)) if !e.is_empty() && !m.is_empty() => Ok((e.to_string(), m.to_string())),
        _ => Err(format!("expected Enum=MEMBER, found `{s}`")),
    }
}

fn ids_text(ids: &BTreeSet<RevisionId>) -> String {
    if ids.is_empty() {
        return "none".into();
    }
    ids.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",")
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::io(path, e))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::io(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| Failure::io(path, e))
}

/// Output of a successful command: text for humans, JSON for tools.
struct Output {
    text: String,
    json: serde_json::Value,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&out.json).expect("output serializes"));
            } else {
                print!("{}", out.text);
            }
            ExitCode::SUCCESS
        }
        Err(f) => {
            f.print(cli.json);
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> Result<Output, Failure> {
    let registry = Registry::open(&cli.store);
    match &cli.command {
        Command::Validate { file } => validate(file),
        Command::Publish { api, file } => {
            let text = read_text(file)?;
            let id = registry.publish(api, &text)?;
            let mut out = format!("{api}: published revision {id}\n");
            let mut changes = serde_json::Value::Null;
            if id > 1 {
                let cs = diff(&registry.history(api)?, id - 1, id)?;
                out.push_str(&cs.to_string());
                changes = serde_json::to_value(&cs).expect("changes serialize");
            }
            Ok(Output { text: out, json: json!({ "api": api, "revision": id, "changes": changes }) })
        }
        Command::Diff { api, from, to } => {
            let cs = diff(&registry.history(api)?, *from, *to)?;
            Ok(Output { text: cs.to_string(), json: serde_json::to_value(&cs).expect("changes serialize") })
        }
        Command::InternalRep { api, supported } => {
            let history = registry.history(api)?;
            let ids = match supported {
                Some(ids) => ids.clone(),
                None => registry.manifest(api)?.supported,
            };
            let ir = derive_internal(&history, &ids)?;
            Ok(Output { text: ir.report(), json: serde_json::to_value(&ir).expect("representation serializes") })
        }
        Command::Resolve { api, client, revision } => {
            let client = ClientDefinition::new(parse_definition(&read_text(client)?)?, *revision)
                .map_err(apievo_core::resolution::ResolutionErrors::from)?;
            let history = registry.history(api)?;
            let ir = derive_internal(&history, &registry.manifest(api)?.supported)?;
            let map = resolve(&client, &history, &ir)?;
            let json = json!({
                "revision": map.revision,
                "records": map.records,
                "enums": map.enums,
                "operations": map.operations,
            });
            Ok(Output { text: map.table(), json })
        }
        Command::Convert(args) => convert(&registry, args),
        Command::Encode(args) => {
            let (schema, ty) = codec_schema(args)?;
            let text = read_text(&args.input)?;
            let value: Value = serde_json::from_str(&text)
                .map_err(|e| Failure::usage(format!("{}: {e}", args.input.display())))?;
            let bytes = codec::encode(&value, &schema, &ty, args.direction.into())?;
            write_bytes(&args.output, &bytes)?;
            Ok(Output { text: format!("wrote {} bytes\n", bytes.len()), json: json!({ "bytes": bytes.len() }) })
        }
        Command::Decode(args) => {
            let (schema, ty) = codec_schema(args)?;
            let value = codec::decode(&read_bytes(&args.input)?, &schema, &ty, args.direction.into())?;
            let mut text = serde_json::to_string_pretty(&value).expect("value serializes");
            text.push('\n');
            fs::write(&args.output, &text).map_err(|e| Failure::io(&args.output, e))?;
            Ok(Output { text: format!("{value}\n"), json: serde_json::to_value(&value).expect("value serializes") })
        }
        Command::Registry(cmd) => registry_command(&registry, cmd),
        Command::Bench { iterations } => {
            if *iterations == 0 {
                return Err(Failure::usage("--iterations must be at least 1"));
            }
            let r = apievo_core::bench::run(*iterations)?;
            let text = format!(
                "iterations {}\nmedian {:.2?}\nmean {:.2?}\nmin {:.2?}\nmax {:.2?}\ntotal {:.2?}\n",
                r.iterations, r.median, r.mean, r.min, r.max, r.total
            );
            Ok(Output { text, json: serde_json::to_value(&r).expect("report serializes") })
        }
    }
}

fn validate(file: &Path) -> Result<Output, Failure> {
    let def = parse_syntax(&read_text(file)?)?;
    let diags = validate_wellformedness(&def);
    if diags.iter().any(|d| d.severity == Severity::Error) {
        return Err(Failure::diagnostics(&diags));
    }
    let mut text = format!("{}: ok\n", def.name);
    for d in &diags {
        text.push_str(&format!("{d}\n"));
    }
    Ok(Output { text, json: json!({ "api": def.name, "valid": true, "diagnostics": diags }) })
}

fn convert(registry: &Registry, args: &ConvertArgs) -> Result<Output, Failure> {
    let client = ClientDefinition::new(parse_definition(&read_text(&args.client)?)?, args.revision)
        .map_err(apievo_core::resolution::ResolutionErrors::from)?;
    let history = registry.history(&args.api)?;
    let ir = derive_internal(&history, &registry.manifest(&args.api)?.supported)?;
    let map = resolve(&client, &history, &ir)?;
    let mut options = ConversionOptions::default();
    for (e, m) in &args.enum_fallbacks {
        options = options.with_fallback(e, m);
    }
    let direction = args.direction.into();
    let bytes = convert_payload(&read_bytes(&args.input)?, &map, &args.type_name, direction, &options)?;
    write_bytes(&args.output, &bytes)?;
    Ok(Output {
        text: format!("{direction} {}: wrote {} bytes\n", args.type_name, bytes.len()),
        json: json!({ "direction": direction, "type": args.type_name, "bytes": bytes.len() }),
    })
}

fn codec_schema(args: &CodecArgs) -> Result<(Schema, TypeExpr), Failure> {
    let schema = schema_of(&parse_definition(&read_text(&args.definition)?)?)?;
    let ty = schema
        .type_expr(&args.type_name)
        .cloned()
        .ok_or_else(|| Failure::usage(format!("no type named {} in {}", args.type_name, args.definition.display())))?;
    Ok((schema, ty))
}

fn registry_command(registry: &Registry, cmd: &RegistryCommand) -> Result<Output, Failure> {
    match cmd {
        RegistryCommand::Status { api } => {
            let apis = match api {
                Some(a) => vec![a.clone()],
                None => registry.apis()?,
            };
            let mut text = String::new();
            let mut manifests = Vec::new();
            for a in &apis {
                let m = registry.manifest(a)?;
                text.push_str(&format!("{a}\n  head {}\n  supported {}\n", m.head, ids_text(&m.supported)));
                for c in &m.clients {
                    let flag = if c.orphaned { " orphaned" } else { "" };
                    text.push_str(&format!("  client {} revision {}{flag}\n", c.name, c.revision));
                }
                manifests.push(m);
            }
            Ok(Output { text, json: serde_json::to_value(&manifests).expect("manifest serializes") })
        }
        RegistryCommand::SetSupported { api, revisions, force } => {
            let r = registry.set_supported(api, revisions, *force)?;
            let mut text = format!("{api}: supported {} (was {})\n", ids_text(&r.supported), ids_text(&r.previous));
            for c in &r.orphaned {
                text.push_str(&format!("orphaned client {c}\n"));
            }
            Ok(Output { text, json: serde_json::to_value(&r).expect("report serializes") })
        }
        RegistryCommand::RegisterClient { api, name, file, revision } => {
            registry.register_client(api, name, &read_text(file)?, *revision)?;
            Ok(Output {
                text: format!("{api}: registered client {name} at revision {revision}\n"),
                json: json!({ "api": api, "client": name, "revision": revision }),
            })
        }
    }
}
