//! Command-line front end.
//!
//! Exit codes: 0 definite result, 1 other error, 2 parse error,
//! 3 unknown or inconclusive, 4 internal inconsistency.

use std::ffi::OsString;
use std::io::Read;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::error::Error;
use crate::filtration::{locate_level, FiltrationSignature, LevelIndex};
use crate::freiheit::{freiheit_check, lemma4_criterion, theorem3_criterion, Bounds, Outcome};
use crate::jacobian::select_generators;
use crate::magnus;
use crate::oracle::{cross_validate_criteria, falsify_freedom, CrossSizes, SampleSpec};
use crate::parse::{parse_index_set, parse_ring_element, parse_word, parse_word_list};
use crate::ring::QuotientSpec;
use crate::schreier::SchreierSystem;
use crate::{fox, Word};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_UNKNOWN: i32 = 3;
pub const EXIT_INCONSISTENT: i32 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Parser, Debug)]
#[command(name = "freikalk", version, about = "Fox calculus and freedom theorems for free groups")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Rank of the free group; inferred from the input when omitted.
    #[arg(long, global = true)]
    pub rank: Option<u32>,
    #[arg(long, global = true, default_value = "gamma2;m=[2]")]
    pub signature: String,
    /// Magnus truncation degree.
    #[arg(long, global = true, env = "FREIKALK_TRUNC", default_value_t = 8)]
    pub trunc: usize,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// e.g. `conj=3,power=2,factors=2,samples=10000`
    #[arg(long, global = true)]
    pub bounds: Option<String>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fox derivative `D_k` of a group-ring element.
    Derive {
        #[arg(long)]
        word: String,
        #[arg(long)]
        wrt: u32,
    },
    /// Truncated Magnus expansion.
    Expand {
        #[arg(long)]
        word: String,
    },
    /// Lower-central class, and the level in `N₁₁` for words inside it.
    Weight {
        #[arg(long)]
        word: String,
    },
    /// Schreier rewriting into generators of `γ₂F`.
    Rewrite {
        #[arg(long)]
        word: String,
        /// Generators of `H`, e.g. `1,2`.
        #[arg(long)]
        keep: Option<String>,
    },
    /// Derivative membership criteria.
    Criterion {
        #[arg(long, value_enum)]
        kind: CriterionKind,
        #[arg(long)]
        word: String,
        #[arg(long)]
        keep: String,
        /// Commutator depth for `--kind lemma4`: tests `gr(F_K, γ_{n+1})`.
        #[arg(long, default_value_t = 1)]
        n: usize,
    },
    /// Freedom verdict for a one-relator quotient.
    Freiheit {
        #[arg(long)]
        word: String,
        /// Levels `k,l;k,l`; all levels of the signature when omitted.
        #[arg(long)]
        levels: Option<String>,
    },
    /// Generator selection for a relator tuple.
    Gft {
        #[arg(long)]
        relators: String,
    },
    /// Sampling falsifier, or cross-validation of the criteria.
    Verify {
        #[arg(long, default_value = "")]
        relators: String,
        #[arg(long)]
        keep: Option<String>,
        #[arg(long, default_value_t = 2)]
        level: usize,
        #[arg(long)]
        cross: bool,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CriterionKind {
    Theorem3,
    Lemma4,
}

/// Output of one invocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

struct Reply {
    text: String,
    json: Value,
    code: i32,
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse { .. } => EXIT_PARSE,
        Error::Inconclusive(_) => EXIT_UNKNOWN,
        Error::InternalInconsistency(_) => EXIT_INCONSISTENT,
        _ => EXIT_ERROR,
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Parse { .. } => "parse",
        Error::Inconclusive(_) => "inconclusive",
        Error::InternalInconsistency(_) => "internal_inconsistency",
        _ => "error",
    }
}

fn read_input(src: &str) -> Result<Vec<String>, Error> {
    if src != "-" {
        return Ok(vec![src.to_string()]);
    }
    let mut buf = String::new();
    std::io::stdin()
        .read_to_string(&mut buf)
        .map_err(|e| Error::PreconditionFailed(format!("reading stdin: {e}")))?;
    Ok(buf.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect())
}

fn rank_of(explicit: Option<u32>, words: &[&Word]) -> u32 {
    explicit.unwrap_or_else(|| words.iter().map(|w| w.max_gen()).max().unwrap_or(1).max(1))
}

fn parse_levels(s: &str) -> Result<Vec<LevelIndex>, Error> {
    s.split(';')
        .map(|p| {
            let v = parse_index_set(p)?;
            match v.as_slice() {
                [k, l] => Ok(LevelIndex::new(*k as usize, *l as usize)),
                _ => Err(Error::Parse { pos: 1, msg: format!("level '{p}' must be k,l") }),
            }
        })
        .collect()
}

fn batch(src: &str, mut one: impl FnMut(&str) -> Result<(String, Value), Error>) -> Result<Reply, Error> {
    let inputs = read_input(src)?;
    let mut texts = Vec::new();
    let mut values = Vec::new();
    for i in &inputs {
        let (t, v) = one(i)?;
        texts.push(t);
        values.push(v);
    }
    let json = if src == "-" { Value::Array(values) } else { values.pop().unwrap_or(Value::Null) };
    Ok(Reply { text: texts.join("\n"), json, code: EXIT_OK })
}

fn dispatch(cli: &Cli, bounds: &Bounds) -> Result<Reply, Error> {
    let c = &cli.common;
    let d = c.trunc;
    match &cli.command {
        Command::Derive { word, wrt } => batch(word, |src| {
            let u = parse_ring_element(src, c.rank)?;
            let rank = c.rank.unwrap_or_else(|| u.max_gen().max(*wrt));
            let group = crate::FreeGroup::new(rank)?;
            let du = fox::derive_in(&group, &u, *wrt)?;
            Ok((du.to_string(), json!({"input": u.to_string(), "wrt": wrt, "derivative": du.to_string(), "terms": du.to_json()})))
        }),
        Command::Expand { word } => batch(word, |src| {
            let u = parse_ring_element(src, c.rank)?;
            let s = magnus::expand(&u, d);
            let v = magnus::ideal_valuation(&u, d);
            Ok((s.to_string(), json!({"input": u.to_string(), "series": s.to_json(), "valuation": v})))
        }),
        Command::Weight { word } => batch(word, |src| {
            let w = parse_word(src, c.rank)?;
            if w.is_identity() {
                return Err(Error::IdentityElement);
            }
            let class = magnus::lcs_class(&w, d)?;
            let sig: FiltrationSignature = c.signature.parse()?;
            let rank = rank_of(c.rank, &[&w]);
            let level = match locate_level(&w, rank, &sig, d) {
                Ok(i) => Some(i),
                Err(Error::NotInVerbal) => None,
                Err(e) => return Err(e),
            };
            let text = match level {
                Some(i) => format!("class {class}, level (1,{i})"),
                None => format!("class {class}"),
            };
            Ok((text, json!({"word": w.to_string(), "class": class, "level": level.map(|i| LevelIndex::new(1, i))})))
        }),
        Command::Rewrite { word, keep } => batch(word, |src| {
            let w = parse_word(src, c.rank)?;
            let rank = rank_of(c.rank, &[&w]);
            let mark = keep.as_deref().map(parse_index_set).transpose()?.unwrap_or_default();
            let mut sys = SchreierSystem::new(rank, &QuotientSpec::abelian(), &mark)?;
            let x = sys.rewrite(&w)?;
            let mut ids: Vec<u32> = x.syllables().iter().map(|s| s.gen).collect();
            ids.sort_unstable();
            ids.dedup();
            let gens: Vec<Value> = ids
                .iter()
                .map(|&z| {
                    let g = sys.generator(z);
                    json!({"z": z, "s": g.s, "j": g.j, "word": g.word.to_string(), "alpha": sys.is_alpha_generator(z)})
                })
                .collect();
            let text = x.display_with("x");
            Ok((text.clone(), json!({"word": w.to_string(), "rewritten": text, "generators": gens})))
        }),
        Command::Criterion { kind, word, keep, n } => batch(word, |src| {
            let w = parse_word(src, c.rank)?;
            let rank = rank_of(c.rank, &[&w]);
            let k_set = parse_index_set(keep)?;
            match kind {
                CriterionKind::Theorem3 => {
                    let r = theorem3_criterion(&w, rank, &k_set, &QuotientSpec::abelian())?;
                    let res: Vec<Value> = r.residues.iter().map(|(k, e)| json!({"k": k, "residue": e.to_string()})).collect();
                    let text = if r.holds {
                        "holds".to_string()
                    } else {
                        let parts: Vec<String> = r.residues.iter().map(|(k, e)| format!("D_{k} -> {e}")).collect();
                        format!("fails: {}", parts.join(", "))
                    };
                    Ok((text, json!({"kind": "theorem3", "word": w.to_string(), "keep": k_set, "holds": r.holds, "residues": res})))
                }
                CriterionKind::Lemma4 => {
                    let ok = lemma4_criterion(&w, rank, &k_set, *n, d)?;
                    Ok((
                        if ok { "holds" } else { "fails" }.to_string(),
                        json!({"kind": "lemma4", "word": w.to_string(), "keep": k_set, "n": n, "holds": ok}),
                    ))
                }
            }
        }),
        Command::Freiheit { word, levels } => {
            let sig: FiltrationSignature = c.signature.parse()?;
            let targets = levels.as_deref().map(parse_levels).transpose()?.unwrap_or_default();
            let mut worst = EXIT_OK;
            let mut reply = batch(word, |src| {
                let w = parse_word(src, c.rank)?;
                let rank = rank_of(c.rank, &[&w]);
                let v = freiheit_check(&w, rank, &sig, &targets, bounds, c.seed, d)?;
                if v.outcome == Outcome::Unknown {
                    worst = EXIT_UNKNOWN;
                }
                let mut lines = vec![format!("{}: {:?} (relator level {})", w, v.outcome, v.relator_level)];
                for l in &v.levels {
                    let wit = l.certificate.as_ref().map(|c| format!("; witness {}", c.witness)).unwrap_or_default();
                    lines.push(format!("  {} {:?}: {}{}", l.level, l.outcome, l.reason, wit));
                }
                Ok((lines.join("\n"), serde_json::to_value(&v).map_err(|e| Error::InternalInconsistency(e.to_string()))?))
            })?;
            reply.code = worst;
            Ok(reply)
        }
        Command::Gft { relators } => {
            let rels = parse_word_list(relators, c.rank)?;
            let refs: Vec<&Word> = rels.iter().collect();
            let rank = rank_of(c.rank, &refs);
            let sig: FiltrationSignature = c.signature.parse()?;
            let r = select_generators(&rels, rank, &sig, d)?;
            let names: Vec<String> = r.selected.iter().map(|j| format!("y{j}")).collect();
            let text = format!(
                "I_s = {:?}\nselected = {{{}}}\np = {} (n - m = {})",
                r.pivot_columns,
                names.join(","),
                r.p,
                rank as usize - rels.len()
            );
            Ok(Reply {
                text,
                json: serde_json::to_value(&r).map_err(|e| Error::InternalInconsistency(e.to_string()))?,
                code: EXIT_OK,
            })
        }
        Command::Verify { relators, keep, level, cross } => {
            let rels = if relators.trim().is_empty() { Vec::new() } else { parse_word_list(relators, c.rank)? };
            let refs: Vec<&Word> = rels.iter().collect();
            let rank = rank_of(c.rank, &refs).max(2);
            if *cross {
                let sizes = CrossSizes { count: bounds.samples, rank, max_len: 10, weight: *level };
                let r = cross_validate_criteria(c.seed, sizes)?;
                let text = r
                    .tallies
                    .iter()
                    .map(|t| format!("{}: {}/{}", t.name, t.agree, t.total))
                    .collect::<Vec<_>>()
                    .join("\n");
                let code = if r.all_agree() { EXIT_OK } else { EXIT_INCONSISTENT };
                return Ok(Reply { text, json: serde_json::to_value(&r).map_err(|e| Error::InternalInconsistency(e.to_string()))?, code });
            }
            let keep = match keep {
                Some(k) => parse_index_set(k)?,
                None => (1..rank).collect(),
            };
            let spec = SampleSpec {
                relators: rels,
                rank,
                conj_len: bounds.conj,
                factors: bounds.factors,
                count: bounds.samples,
                seed: c.seed,
                level: LevelIndex::new(1, *level),
                keep,
            };
            let r = falsify_freedom(&spec, d)?;
            let text = match r.counterexamples.first() {
                Some(ce) => format!(
                    "counterexample {} (class {} in H ∩ N) after {} samples",
                    ce.sample.word, ce.class_in_h, r.instances
                ),
                None => format!("none found: {} samples, {} in H ({})", r.instances, r.hits, r.note),
            };
            Ok(Reply { text, json: serde_json::to_value(&r).map_err(|e| Error::InternalInconsistency(e.to_string()))?, code: EXIT_OK })
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Derive { .. } => "derive",
        Command::Expand { .. } => "expand",
        Command::Weight { .. } => "weight",
        Command::Rewrite { .. } => "rewrite",
        Command::Criterion { .. } => "criterion",
        Command::Freiheit { .. } => "freiheit",
        Command::Gft { .. } => "gft",
        Command::Verify { .. } => "verify",
    }
}

/// Parses `argv` (program name first) and runs it.
pub fn run<I, T>(argv: I) -> Run
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
            let out = e.render().to_string();
            return if code == EXIT_OK {
                Run { code, stdout: out, stderr: String::new() }
            } else {
                Run { code, stdout: String::new(), stderr: out }
            };
        }
    };
    let json_mode = cli.common.format == Format::Json;
    let bounds = match cli.common.bounds.as_deref().map(str::parse::<Bounds>).transpose() {
        Ok(b) => b.unwrap_or_default(),
        Err(e) => return failure(&e, json_mode),
    };
    match dispatch(&cli, &bounds) {
        Ok(reply) => {
            let stdout = if json_mode {
                let doc = json!({
                    "tool": "freikalk",
                    "version": env!("CARGO_PKG_VERSION"),
                    "command": command_name(&cli.command),
                    "signature": cli.common.signature,
                    "trunc": cli.common.trunc,
                    "seed": cli.common.seed,
                    "bounds": bounds,
                    "result": reply.json,
                });
                serde_json::to_string_pretty(&doc).unwrap_or_default() + "\n"
            } else {
                reply.text + "\n"
            };
            Run { code: reply.code, stdout, stderr: String::new() }
        }
        Err(e) => failure(&e, json_mode),
    }
}

fn failure(e: &Error, json_mode: bool) -> Run {
    let code = exit_code(e);
    let stdout = if json_mode {
        let doc = json!({"tool": "freikalk", "version": env!("CARGO_PKG_VERSION"), "error": error_kind(e), "message": e.to_string()});
        serde_json::to_string_pretty(&doc).unwrap_or_default() + "\n"
    } else {
        String::new()
    };
    Run { code, stdout, stderr: format!("error: {e}\n") }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn go(args: &[&str]) -> Run {
        run(std::iter::once("freikalk").chain(args.iter().copied()))
    }

    #[test]
    fn derive_text() {
        let r = go(&["derive", "--rank", "3", "--word", "[y1,y3]", "--wrt", "1"]);
        assert_eq!(r.code, 0, "{}", r.stderr);
        let expected = parse_ring_element("y3 - [y1,y3]", None).unwrap().to_string();
        assert_eq!(r.stdout.trim(), expected);
    }

    #[test]
    fn parse_error_exit() {
        let r = go(&["derive", "--rank", "3", "--word", "[y1,", "--wrt", "1"]);
        assert_eq!(r.code, EXIT_PARSE);
        assert!(r.stderr.contains("column 5"), "{}", r.stderr);
        assert_eq!(go(&["derive", "--wrt"]).code, EXIT_PARSE);
        assert_eq!(go(&["gft", "--relators", "[y1,y2]", "--bounds", "conj"]).code, EXIT_PARSE);
    }

    #[test]
    fn gft_json() {
        let r = go(&["gft", "--rank", "4", "--relators", "[y1,y2];[y3,y4]", "--format", "json"]);
        assert_eq!(r.code, 0, "{}", r.stderr);
        let v: Value = serde_json::from_str(&r.stdout).unwrap();
        assert_eq!(v["result"]["selected"], json!([2, 4]));
        assert_eq!(v["result"]["p"], json!(2));
        assert_eq!(v["version"], json!(env!("CARGO_PKG_VERSION")));
    }

    #[test]
    fn criterion_and_weight() {
        let r = go(&["criterion", "--kind", "theorem3", "--rank", "2", "--word", "[y1,y2]", "--keep", "1"]);
        assert_eq!(r.stdout.trim(), "fails: D_2 -> 1 - y1");
        let r = go(&["weight", "--word", "[[y1,y2],[y1,y3]]"]);
        assert_eq!(r.stdout.trim(), "class 4, level (1,2)");
        assert_eq!(go(&["weight", "--word", "1"]).code, EXIT_ERROR);
    }

    #[test]
    fn freiheit_exit_codes() {
        let r = go(&["freiheit", "--rank", "3", "--word", "[y1,y3]", "--bounds", "samples=200"]);
        assert_eq!(r.code, 0, "{}", r.stderr);
        assert!(r.stdout.starts_with("y1^-1"), "{}", r.stdout);
        assert!(r.stdout.contains("Free"));
    }
}
