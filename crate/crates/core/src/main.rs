use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use treefst::fst::{apply_to_names, read_fst, shortest_path, write_fst, RawFst};
use treefst::regex::{compile_regex, parse_regex};
use treefst::rules::{self, compile_forest, compile_report, report_totals, validate_forest, verify_forest, ReportRow};
use treefst::testgen::{gen_forest, selftest, GenConfig};
use treefst::tree::{interpret, load_forest, Forest};
use treefst::{Alphabet, Fst, SymbolId, SymbolTable};

#[derive(Parser)]
#[command(name = "treefst", version, about = "Decision trees to weighted transducers")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(clap::Args, Clone, Copy)]
struct RandomForests {
    /// First seed of a run of random forests, used when no tree file is given.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of random forests.
    #[arg(long, default_value_t = 25)]
    count: u64,
    #[arg(long, default_value_t = 4)]
    symbols: usize,
    #[arg(long, default_value_t = 3)]
    outputs: usize,
    #[arg(long, default_value_t = 3)]
    depth: usize,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compile a tree file: one machine per tree plus forest.fst.
    Compile {
        forest: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// N-best outputs of a compiled machine for one input string.
    Apply {
        fst: PathBuf,
        #[arg(long)]
        input: String,
        #[arg(short, default_value_t = 1)]
        n: usize,
        /// Symbol file; defaults to symbols.txt next to the machine.
        #[arg(long)]
        symbols: Option<PathBuf>,
    },
    /// Realizations the trees give each position of a string.
    Interpret {
        forest: PathBuf,
        #[arg(long)]
        input: String,
    },
    /// Compare the compiled forest with the interpreter on every string pair.
    Verify {
        forest: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        max_len: usize,
        #[command(flatten)]
        random: RandomForests,
    },
    /// Check that every node's branches split its contexts exactly.
    Validate {
        forest: Option<PathBuf>,
        #[command(flatten)]
        random: RandomForests,
    },
    /// Size and time report from a compile output directory.
    Stats { dir: PathBuf },
    /// Best word string for a lattice through grammar, dictionary and rules.
    Decode {
        #[arg(long)]
        grammar: PathBuf,
        #[arg(long)]
        dict: PathBuf,
        #[arg(long)]
        phi: PathBuf,
        #[arg(long)]
        lattice: PathBuf,
    },
    /// Parse an expression and print its canonical form and machine size.
    Regex {
        expr: String,
        #[arg(long)]
        symbols: Option<PathBuf>,
        #[arg(long)]
        classes: Option<PathBuf>,
    },
    /// Write a random forest in the tree-file format.
    Generate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        symbols: usize,
        #[arg(long, default_value_t = 2)]
        outputs: usize,
        #[arg(long, default_value_t = 2)]
        depth: usize,
    },
    /// Run the property suite on seeded random forests and rules.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        cases: usize,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load(path: &Path) -> Result<Forest> {
    load_forest(path).with_context(|| format!("in {}", path.display()))
}

/// The named forest, or the configured run of random ones.
fn forests(path: Option<&Path>, r: RandomForests) -> Result<Vec<(String, Forest)>> {
    if let Some(p) = path {
        return Ok(vec![(p.display().to_string(), load(p)?)]);
    }
    let cfg = GenConfig {
        num_input_symbols: r.symbols,
        outputs_per_symbol: r.outputs,
        max_depth: r.depth,
        max_string_len: 4,
        seed: r.seed,
    };
    (r.seed..r.seed + r.count)
        .map(|s| Ok((format!("seed {s}"), gen_forest(&cfg.with_seed(s))?)))
        .collect()
}

fn file_stem(phone: &str) -> String {
    phone
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "+-_".contains(c) { c } else { '_' })
        .collect()
}

fn compile(forest: &Path, out: &Path) -> Result<()> {
    let f = load(forest)?;
    let compiled = compile_report::<f64>(&f)?;
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let mut report = String::from("tree\tleaves\tstates\tarcs\tseconds\n");
    for (row, m) in compiled.rows.iter().zip(&compiled.trees) {
        fs::write(out.join(format!("{}.fst", file_stem(&row.phone))), write_fst(m))?;
        report.push_str(&format!(
            "{}\t{}\t{}\t{}\t{:.6}\n",
            row.phone, row.leaves, row.states, row.arcs, row.seconds
        ));
    }
    fs::write(out.join("forest.fst"), write_fst(&compiled.forest))?;
    fs::write(out.join("symbols.txt"), f.symbols().to_symbol_file())?;
    fs::write(out.join("compile_report.tsv"), report)?;
    let s = compiled.forest.stats();
    println!(
        "compiled {} trees into {}: forest has {} states, {} arcs",
        compiled.rows.len(),
        out.display(),
        s.states,
        s.arcs
    );
    Ok(())
}

fn load_machine(path: &Path, symbols: Option<&Path>) -> Result<Fst> {
    let sibling = path.parent().map(|d| d.join("symbols.txt"));
    let table_file = symbols.map(Path::to_path_buf).or(sibling.filter(|p| p.exists()));
    let mut table = match table_file {
        Some(p) => SymbolTable::parse_symbol_file(&read(&p)?).with_context(|| format!("in {}", p.display()))?,
        None => SymbolTable::new(),
    };
    let raw = read_fst(&read(path)?, &mut table).with_context(|| format!("in {}", path.display()))?;
    Ok(raw.into_wfsa(Arc::new(table), None)?)
}

fn apply(path: &Path, input: &str, n: usize, symbols: Option<&Path>) -> Result<()> {
    let m = load_machine(path, symbols)?;
    let restricted = apply_to_names(&m, input)?;
    let best = shortest_path(&restricted, n);
    if best.is_empty() {
        bail!("no output for `{input}`");
    }
    let ab = restricted.alphabet();
    let t = ab.symbols();
    for (labels, w) in best {
        let out: Vec<&str> = ab.outputs(&labels[1..labels.len() - 1]).into_iter().map(|s| t.name(s)).collect();
        println!("{}\t{:.4}", out.join(" "), w.value());
    }
    Ok(())
}

fn interpret_cmd(path: &Path, input: &str) -> Result<()> {
    let f = load(path)?;
    let t = f.symbols();
    let x = input
        .split_whitespace()
        .map(|n| t.get(n).with_context(|| format!("unknown symbol `{n}`")))
        .collect::<Result<Vec<SymbolId>>>()?;
    let mut w = vec![SymbolId::BOUNDARY];
    w.extend(&x);
    w.push(SymbolId::BOUNDARY);
    println!("pos\tinput\tleaf\toutput\tprob\tweight");
    for i in 1..=x.len() {
        let name = t.name(w[i]);
        let Some(tree) = f.tree_for(w[i]) else {
            println!("{i}\t{name}\t-\t{name}\t1\t{:.4}", 0.0);
            continue;
        };
        let mut r = interpret(tree, &w, i)?;
        r.outputs.sort_by(|a, b| a.2.total_cmp(&b.2));
        for (o, p, wt) in r.outputs {
            println!("{i}\t{name}\t{}\t{}\t{p}\t{wt:.4}", r.leaf, t.name(o));
        }
    }
    Ok(())
}

fn verify(path: Option<&Path>, max_len: usize, random: RandomForests) -> Result<bool> {
    let all = forests(path, random)?;
    for (name, f) in &all {
        let phi: Fst = compile_forest(f)?;
        let r = verify_forest(f, &phi, max_len, 1e-9)?;
        if let Some(m) = r.mismatch {
            println!("{name}: MISMATCH {m}");
            return Ok(false);
        }
        println!(
            "{name}: {} inputs, {} string pairs, {} impossible on both sides, no mismatch",
            r.inputs, r.compared, r.infinite
        );
    }
    println!("all {} forests agree with the interpreter", all.len());
    Ok(true)
}

fn validate(path: Option<&Path>, random: RandomForests) -> Result<bool> {
    let all = forests(path, random)?;
    let mut ok = true;
    for (name, f) in &all {
        let issues = validate_forest(f)?;
        if issues.is_empty() {
            println!("{name}: {} trees, every node splits its contexts exactly", f.trees().len());
        }
        for i in issues {
            ok = false;
            println!("{name}: {i}");
        }
    }
    Ok(ok)
}

fn stats(dir: &Path) -> Result<()> {
    let text = read(&dir.join("compile_report.tsv"))?;
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate().skip(1) {
        let f: Vec<&str> = line.split('\t').collect();
        let parse = || -> Option<ReportRow> {
            Some(ReportRow {
                phone: f.first()?.to_string(),
                leaves: f.get(1)?.parse().ok()?,
                states: f.get(2)?.parse().ok()?,
                arcs: f.get(3)?.parse().ok()?,
                seconds: f.get(4)?.parse().ok()?,
            })
        };
        rows.push(parse().with_context(|| format!("compile_report.tsv line {}: malformed row", n + 1))?);
    }
    let total = report_totals(&rows);
    let w = rows.iter().map(|r| r.phone.len()).max().unwrap_or(0).max(5);
    println!("{:<w$}  {:>6}  {:>8}  {:>8}  {:>9}", "tree", "leaves", "states", "arcs", "seconds");
    for r in rows.iter().chain([&total]) {
        println!(
            "{:<w$}  {:>6}  {:>8}  {:>8}  {:>9.4}",
            r.phone, r.leaves, r.states, r.arcs, r.seconds
        );
    }
    let forest = dir.join("forest.fst");
    if forest.exists() {
        let s = load_machine(&forest, None)?.stats();
        println!("forest machine: {} states, {} arcs", s.states, s.arcs);
    }
    Ok(())
}

fn decode(grammar: &Path, dict: &Path, phi: &Path, lattice: &Path) -> Result<()> {
    let mut table = SymbolTable::new();
    table.intern(rules::PAD)?;
    let raws = [grammar, dict, phi, lattice]
        .iter()
        .map(|p| read_fst(&read(p)?, &mut table).with_context(|| format!("in {}", p.display())))
        .collect::<Result<Vec<RawFst>>>()?;
    let table = Arc::new(table);
    let [g, d, p, a] = raws
        .into_iter()
        .map(|r| r.into_wfsa::<f64>(table.clone(), None))
        .collect::<Result<Vec<_>, _>>()?
        .try_into()
        .expect("four machines");
    let r = rules::decode(&g, &d, &p, &a)?;
    println!("{}\t{:.4}", r.words.join(" "), r.weight);
    let phones: Vec<&str> = r.phones.iter().map(String::as_str).filter(|p| *p != "#").collect();
    println!("realized as: {}", phones.join(" "));
    Ok(())
}

fn regex_cmd(expr: &str, symbols: Option<&Path>, classes: Option<&Path>) -> Result<()> {
    let mut t = match symbols {
        Some(p) => SymbolTable::parse_symbol_file(&read(p)?)?,
        None => {
            let mut t = SymbolTable::new();
            let spaced: String = expr.chars().map(|c| if "()[]|&!".contains(c) { ' ' } else { c }).collect();
            for tok in spaced.split_whitespace() {
                let name = tok.trim_end_matches(['*', '+', '?']);
                if !name.is_empty() && name != "." && name != "#" && name != "Opt" {
                    t.intern(name)?;
                }
            }
            t
        }
    };
    if let Some(p) = classes {
        t.parse_class_file(&read(p)?)?;
    }
    let t = Arc::new(t);
    let r = parse_regex(expr, &t)?;
    let m: Fst = compile_regex(&r, &Alphabet::identity(t))?;
    let s = m.stats();
    println!("{r}");
    println!("{} states, {} arcs", s.states, s.arcs);
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.cmd {
        Cmd::Compile { forest, out } => compile(&forest, &out)?,
        Cmd::Apply { fst, input, n, symbols } => apply(&fst, &input, n, symbols.as_deref())?,
        Cmd::Interpret { forest, input } => interpret_cmd(&forest, &input)?,
        Cmd::Verify { forest, max_len, random } => return verify(forest.as_deref(), max_len, random),
        Cmd::Validate { forest, random } => return validate(forest.as_deref(), random),
        Cmd::Stats { dir } => stats(&dir)?,
        Cmd::Decode {
            grammar,
            dict,
            phi,
            lattice,
        } => decode(&grammar, &dict, &phi, &lattice)?,
        Cmd::Regex { expr, symbols, classes } => regex_cmd(&expr, symbols.as_deref(), classes.as_deref())?,
        Cmd::Generate {
            seed,
            symbols,
            outputs,
            depth,
        } => {
            let cfg = GenConfig {
                num_input_symbols: symbols,
                outputs_per_symbol: outputs,
                max_depth: depth,
                max_string_len: 4,
                seed,
            };
            print!("{}", gen_forest(&cfg)?.to_tree_file());
        }
        Cmd::Selftest { seed, cases } => {
            let results = selftest(seed, cases);
            for r in &results {
                println!("{}  {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
            }
            return Ok(results.iter().all(|r| r.passed));
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
