use crate::ast::AstNode;
use crate::testlang::{Field, FieldKind, Record, SizeSpec, TestlangDoc};

/// A leaf of a value tree together with the field that describes it.
#[derive(Clone, Debug)]
pub struct LeafInfo<'d> {
    pub path: String,
    pub field: &'d Field,
    /// For size fields: the field whose length this leaf declares.
    pub sizes: Option<&'d Field>,
    /// For the path of the size field that declares this leaf's length.
    pub sized_by: Option<String>,
    /// Nothing follows this leaf in the input.
    pub tail: bool,
    pub in_array: bool,
}

/// Leaves of `root` (an INPUT tree) in serialization order. Nodes that do not
/// match the document are skipped.
pub fn leaf_infos<'d>(doc: &'d TestlangDoc, root: &AstNode) -> Vec<LeafInfo<'d>> {
    let mut out = Vec::new();
    if let Some(entry) = doc.entry() {
        walk_record(doc, entry, root, true, false, &mut out);
    }
    out
}

fn walk_record<'d>(
    doc: &'d TestlangDoc,
    rec: &'d Record,
    node: &AstNode,
    tail: bool,
    in_array: bool,
    out: &mut Vec<LeafInfo<'d>>,
) {
    let children = node.children();
    let refs = rec.size_refs();
    let n = rec.fields.len();
    for (i, (f, child)) in rec.fields.iter().zip(children).enumerate() {
        let sized_by = match &f.size {
            Some(SizeSpec::Ref { field, .. }) => rec
                .fields
                .iter()
                .position(|g| &g.name == field)
                .and_then(|j| children.get(j))
                .map(|c| c.path.clone()),
            _ => None,
        };
        let ctx = Ctx {
            tail: tail && i + 1 == n,
            in_array,
            sizes: refs.get(f.name.as_str()).copied(),
            sized_by,
        };
        walk_field(doc, f, child, ctx, out);
    }
}

struct Ctx<'d> {
    tail: bool,
    in_array: bool,
    sizes: Option<&'d Field>,
    sized_by: Option<String>,
}

fn walk_field<'d>(doc: &'d TestlangDoc, f: &'d Field, node: &AstNode, ctx: Ctx<'d>, out: &mut Vec<LeafInfo<'d>>) {
    match &f.kind {
        FieldKind::Array(elem) => {
            for item in node.children() {
                let inner = Ctx {
                    tail: false,
                    in_array: true,
                    sizes: None,
                    sized_by: None,
                };
                walk_field(doc, elem, item, inner, out);
            }
        }
        FieldKind::Record(name) => {
            if let Some(rec) = doc.record(name) {
                walk_record(doc, rec, node, ctx.tail, ctx.in_array, out);
            }
        }
        _ if node.is_leaf() => out.push(LeafInfo {
            path: node.path.clone(),
            field: f,
            sizes: ctx.sizes,
            sized_by: ctx.sized_by,
            tail: ctx.tail,
            in_array: ctx.in_array,
        }),
        _ => {}
    }
}
