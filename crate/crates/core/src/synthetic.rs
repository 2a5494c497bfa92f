//! Seeded generator of labeled C gadgets from a fixed template bank.
//!
//! Every vulnerable template has a bounded counterpart: the pair share their
//! surrounding code and differ in the copy primitive or in the lengths used.
//! Oversized lengths come from a range disjoint from the buffer sizes and occur
//! in vulnerable gadgets only, so the two classes are separable on tokens.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{CodeGadget, Corpus, Label};

const DATA_NAMES: &[&str] = &["data", "dataBuffer", "src", "input", "payload", "source", "str", "line"];
const DEST_NAMES: &[&str] = &["dest", "buffer", "dst", "target", "out", "copy", "local"];
const INDEX_NAMES: &[&str] = &["i", "j", "idx", "n", "k"];
const SINK_STEMS: &[&str] = &["goodG2B", "bad", "goodB2G", "helper", "process", "handle", "copyData"];
const SINK_SUFFIXES: &[&str] = &["Sink", "Source", "", "Func", "Impl"];
const FILLER_CALLS: &[&str] = &["printLine", "logMessage", "printHexCharLine", "trace"];

/// Fixed-size buffers in the templates.
const SMALL_SIZES: &[u32] = &[10, 16, 20, 32, 50];
/// Oversized lengths; disjoint from `SMALL_SIZES`.
const BIG_SIZES: &[u32] = &[100, 128, 150, 200, 256];

struct Ctx {
    data: &'static str,
    dest: &'static str,
    index: &'static str,
    sink: String,
    small: u32,
    big: u32,
    fill: char,
}

impl Ctx {
    fn sample(rng: &mut ChaCha8Rng) -> Self {
        let stem = SINK_STEMS.choose(rng).unwrap();
        let suffix = SINK_SUFFIXES.choose(rng).unwrap();
        Ctx {
            data: DATA_NAMES.choose(rng).unwrap(),
            dest: DEST_NAMES.choose(rng).unwrap(),
            index: INDEX_NAMES.choose(rng).unwrap(),
            sink: format!("{stem}{suffix}{}", rng.gen_range(1..10)),
            small: *SMALL_SIZES.choose(rng).unwrap(),
            big: *BIG_SIZES.choose(rng).unwrap(),
            fill: (b'A' + rng.gen_range(0..26u8)) as char,
        }
    }
}

type Render = fn(&Ctx) -> Vec<String>;

struct Template {
    name: &'static str,
    vulnerable: bool,
    render: Render,
}

fn alloc_and_fill(c: &Ctx, alloc: u32, len: u32) -> Vec<String> {
    let Ctx { data, fill, .. } = c;
    vec![
        format!("char * {data};"),
        format!("{data} = (char *)malloc({alloc}*sizeof(char));"),
        format!("memset({data}, '{fill}', {len}-1);"),
        format!("{data}[{len}-1] = '\\0';"),
    ]
}

fn strcpy_overflow(c: &Ctx) -> Vec<String> {
    let mut v = alloc_and_fill(c, c.big, c.big);
    v.push(format!("char {}[{}] = \"\";", c.dest, c.small));
    v.push(format!("strcpy({}, {});", c.dest, c.data));
    v
}

fn strcpy_bounded(c: &Ctx) -> Vec<String> {
    let mut v = alloc_and_fill(c, c.small, c.small);
    v.push(format!("char {}[{}] = \"\";", c.dest, c.small));
    v.push(format!("strcpy({}, {});", c.dest, c.data));
    v
}

fn strcat_overflow(c: &Ctx) -> Vec<String> {
    let mut v = vec![format!("void {}(char * {})", c.sink, c.data)];
    v.push(format!("char {}[{}] = \"\";", c.dest, c.small));
    v.push(format!("memset({}, '{}', {}-1);", c.data, c.fill, c.big));
    v.push(format!("strcat({}, {});", c.dest, c.data));
    v
}

fn strcat_bounded(c: &Ctx) -> Vec<String> {
    let mut v = vec![format!("void {}(char * {})", c.sink, c.data)];
    v.push(format!("char {}[{}] = \"\";", c.dest, c.small));
    v.push(format!("memset({}, '{}', {}-1);", c.data, c.fill, c.small));
    v.push(format!(
        "strncat({}, {}, sizeof({}) - strlen({}) - 1);",
        c.dest, c.data, c.dest, c.dest
    ));
    v
}

fn memcpy_overflow(c: &Ctx) -> Vec<String> {
    let mut v = alloc_and_fill(c, c.big, c.big);
    v.push(format!("char {}[{}];", c.dest, c.small));
    v.push(format!(
        "memcpy({}, {}, strlen({})*sizeof(char));",
        c.dest, c.data, c.data
    ));
    v.push(format!("{}[{}-1] = '\\0';", c.dest, c.small));
    v
}

fn memcpy_bounded(c: &Ctx) -> Vec<String> {
    let mut v = alloc_and_fill(c, c.small, c.small);
    v.push(format!("char {}[{}];", c.dest, c.small));
    v.push(format!(
        "strncpy({}, {}, sizeof({}) - 1);",
        c.dest, c.data, c.dest
    ));
    v.push(format!("{}[{}-1] = '\\0';", c.dest, c.small));
    v
}

fn loop_overflow(c: &Ctx) -> Vec<String> {
    let Ctx { data, dest, index, small, big, .. } = c;
    vec![
        format!("int {dest}[{small}] = {{0}};"),
        format!("{}({data});", c.sink),
        format!("void {}(int * {data})", c.sink),
        format!("size_t {index};"),
        format!("for ({index} = 0; {index} < {big}; {index}++)"),
        format!("{dest}[{index}] = {data}[{index}];"),
    ]
}

fn loop_bounded(c: &Ctx) -> Vec<String> {
    let Ctx { data, dest, index, small, .. } = c;
    vec![
        format!("int {dest}[{small}] = {{0}};"),
        format!("{}({data});", c.sink),
        format!("void {}(int * {data})", c.sink),
        format!("size_t {index};"),
        format!("for ({index} = 0; {index} < {small}; {index}++)"),
        format!("{dest}[{index}] = {data}[{index}];"),
    ]
}

fn index_unchecked(c: &Ctx) -> Vec<String> {
    let Ctx { data, dest, small, .. } = c;
    vec![
        format!("char {dest}[{small}] = \"\";"),
        format!("if (fgets({dest}, {small}, stdin) != NULL)"),
        format!("{data} = atoi({dest});"),
        format!("int buffer[{small}] = {{ 0 }};"),
        format!("if ({data} >= 0)"),
        format!("buffer[{data}] = 1;"),
    ]
}

fn index_checked(c: &Ctx) -> Vec<String> {
    let Ctx { data, dest, small, .. } = c;
    vec![
        format!("char {dest}[{small}] = \"\";"),
        format!("if (fgets({dest}, {small}, stdin) != NULL)"),
        format!("{data} = atoi({dest});"),
        format!("int buffer[{small}] = {{ 0 }};"),
        format!("if ({data} >= 0 && {data} < ({small}))"),
        format!("buffer[{data}] = 1;"),
    ]
}

fn sprintf_overflow(c: &Ctx) -> Vec<String> {
    let mut v = alloc_and_fill(c, c.big, c.big);
    v.push(format!("char {}[{}];", c.dest, c.small));
    v.push(format!("sprintf({}, \"%s\", {});", c.dest, c.data));
    v
}

fn sprintf_bounded(c: &Ctx) -> Vec<String> {
    let mut v = alloc_and_fill(c, c.small, c.small);
    v.push(format!("char {}[{}];", c.dest, c.small));
    v.push(format!(
        "snprintf({}, sizeof({}), \"%s\", {});",
        c.dest, c.dest, c.data
    ));
    v
}

const TEMPLATES: &[Template] = &[
    Template { name: "strcpy-overflow", vulnerable: true, render: strcpy_overflow },
    Template { name: "strcat-overflow", vulnerable: true, render: strcat_overflow },
    Template { name: "memcpy-overflow", vulnerable: true, render: memcpy_overflow },
    Template { name: "loop-overflow", vulnerable: true, render: loop_overflow },
    Template { name: "index-unchecked", vulnerable: true, render: index_unchecked },
    Template { name: "sprintf-overflow", vulnerable: true, render: sprintf_overflow },
    Template { name: "strcpy-bounded", vulnerable: false, render: strcpy_bounded },
    Template { name: "strcat-bounded", vulnerable: false, render: strcat_bounded },
    Template { name: "memcpy-bounded", vulnerable: false, render: memcpy_bounded },
    Template { name: "loop-bounded", vulnerable: false, render: loop_bounded },
    Template { name: "index-checked", vulnerable: false, render: index_checked },
    Template { name: "sprintf-bounded", vulnerable: false, render: sprintf_bounded },
];

/// Names of the templates producing label 1.
pub fn vulnerable_template_names() -> impl Iterator<Item = &'static str> {
    TEMPLATES.iter().filter(|t| t.vulnerable).map(|t| t.name)
}

/// Names of the templates producing label 0.
pub fn safe_template_names() -> impl Iterator<Item = &'static str> {
    TEMPLATES.iter().filter(|t| !t.vulnerable).map(|t| t.name)
}

/// Template name recorded in a generated gadget's origin field.
pub fn template_of(gadget: &CodeGadget) -> Option<&str> {
    gadget.origin.strip_prefix("synthetic/")
}

fn filler(rng: &mut ChaCha8Rng, ctx: &Ctx) -> String {
    match rng.gen_range(0..3) {
        0 => format!("{}({});", FILLER_CALLS.choose(rng).unwrap(), ctx.data),
        1 => format!("int {} = {};", INDEX_NAMES.choose(rng).unwrap(), rng.gen_range(0..10)),
        _ => format!("{}(\"{}\");", FILLER_CALLS.choose(rng).unwrap(), ctx.sink),
    }
}

/// Generate `n_vulnerable + n_safe` gadgets with ids `0..n` in a seeded shuffled order.
pub fn generate_synthetic(n_vulnerable: usize, n_safe: usize, seed: u64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vulnerable: Vec<&Template> = TEMPLATES.iter().filter(|t| t.vulnerable).collect();
    let safe: Vec<&Template> = TEMPLATES.iter().filter(|t| !t.vulnerable).collect();

    let mut plan: Vec<bool> = std::iter::repeat(true)
        .take(n_vulnerable)
        .chain(std::iter::repeat(false).take(n_safe))
        .collect();
    plan.shuffle(&mut rng);

    let gadgets = plan
        .into_iter()
        .enumerate()
        .map(|(id, is_vulnerable)| {
            let bank = if is_vulnerable { &vulnerable } else { &safe };
            let template = bank.choose(&mut rng).unwrap();
            let ctx = Ctx::sample(&mut rng);
            let mut lines = (template.render)(&ctx);
            for _ in 0..rng.gen_range(0..3) {
                let at = rng.gen_range(0..=lines.len());
                let line = filler(&mut rng, &ctx);
                lines.insert(at, line);
            }
            CodeGadget::new(
                id as u64,
                format!("synthetic/{}", template.name),
                lines,
                Label::from(template.vulnerable),
            )
        })
        .collect();
    Corpus::new(format!("synthetic-{seed}"), gadgets)
}
