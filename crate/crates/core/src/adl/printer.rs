use std::fmt::Write;

use super::ast::*;

/// Renders a definition in canonical layout. Parsing the output yields a
/// definition equal to the input.
pub fn print_definition(def: &ApiDefinition) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "api {} {{", def.name);
    for (i, element) in def.elements.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        match element {
            Element::Record(r) => print_record(&mut out, r),
            Element::Enum(e) => print_enum(&mut out, e),
            Element::Service(s) => print_service(&mut out, s),
        }
    }
    out.push_str("}\n");
    out
}

fn replaces_suffix(replaces: &Option<Replaces>) -> String {
    match replaces {
        None => String::new(),
        Some(Replaces::Nothing) => " replaces nothing".into(),
        Some(Replaces::Name(n)) => format!(" replaces {n}"),
    }
}

fn alias_suffix(alias: &Option<String>) -> String {
    alias.as_ref().map(|a| format!(" as {a}")).unwrap_or_default()
}

fn print_record(out: &mut String, r: &RecordType) {
    out.push_str("  ");
    if r.is_abstract {
        out.push_str("abstract ");
    }
    if let Some(opt) = r.default_optionality {
        let _ = write!(out, "{opt} ");
    }
    out.push_str(if r.is_exception { "exception " } else { "record " });
    out.push_str(&r.name);
    if let Some(sup) = &r.super_type {
        let _ = write!(out, " extends {sup}");
    }
    out.push_str(&replaces_suffix(&r.replaces));
    out.push_str(&alias_suffix(&r.alias));
    out.push_str(" {\n");
    for field in &r.fields {
        out.push_str("    ");
        if let Some(opt) = field.optionality {
            let _ = write!(out, "{opt} ");
        }
        let _ = write!(out, "{} {}", field.ty, field.name);
        match &field.replaces {
            None => {}
            Some(FieldReplaces::Nothing) => out.push_str(" replaces nothing"),
            Some(FieldReplaces::Names(names)) => {
                let joined: Vec<String> = names.iter().map(|n| n.to_string()).collect();
                let _ = write!(out, " replaces {}", joined.join(", "));
            }
        }
        out.push_str(&alias_suffix(&field.alias));
        out.push('\n');
    }
    out.push_str("  }\n");
}

fn print_enum(out: &mut String, e: &EnumType) {
    let _ = writeln!(
        out,
        "  enum {}{}{} {{",
        e.name,
        replaces_suffix(&e.replaces),
        alias_suffix(&e.alias)
    );
    for member in &e.members {
        let _ = writeln!(out, "    {}{}", member.name, replaces_suffix(&member.replaces));
    }
    out.push_str("  }\n");
}

fn print_service(out: &mut String, s: &Service) {
    let _ = writeln!(
        out,
        "  service {}{}{} {{",
        s.name,
        replaces_suffix(&s.replaces),
        alias_suffix(&s.alias)
    );
    for op in &s.operations {
        let _ = write!(
            out,
            "    {} {}({}){}{}",
            op.output,
            op.name,
            op.input,
            replaces_suffix(&op.replaces),
            alias_suffix(&op.alias)
        );
        if !op.throws.is_empty() {
            let _ = write!(out, " throws {}", op.throws.join(", "));
        }
        out.push('\n');
    }
    out.push_str("  }\n");
}
