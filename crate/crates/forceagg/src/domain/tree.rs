//! Vehicle classification hierarchy.
//!
//! Classes are ordered in a tree with `unknown` at the root and concrete
//! vehicle types at the leaves. A report's classification is a node anywhere
//! in the tree; coarser observations sit closer to the root.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::DomainError;

/// Identifier of a node in the classification tree.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassId(String);

impl ClassId {
    pub fn new(id: impl Into<String>) -> Self {
        ClassId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ClassId {
    fn from(s: &str) -> Self {
        ClassId(s.to_owned())
    }
}

/// Class hierarchy with a single root. Stored as a child -> parent map.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "TreeFile", into = "TreeFile")]
pub struct ClassificationTree {
    root: ClassId,
    parent: BTreeMap<ClassId, ClassId>,
}

/// On-disk form: `{"root": "unknown", "parents": {"tracked": "unknown", ...}}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct TreeFile {
    root: ClassId,
    parents: BTreeMap<ClassId, ClassId>,
}

impl From<ClassificationTree> for TreeFile {
    fn from(t: ClassificationTree) -> Self {
        TreeFile {
            root: t.root,
            parents: t.parent,
        }
    }
}

impl TryFrom<TreeFile> for ClassificationTree {
    type Error = DomainError;

    fn try_from(f: TreeFile) -> Result<Self, DomainError> {
        ClassificationTree::new(f.root, f.parents)
    }
}

impl ClassificationTree {
    /// Build and validate a tree from a child -> parent map.
    pub fn new(root: ClassId, parent: BTreeMap<ClassId, ClassId>) -> Result<Self, DomainError> {
        if parent.contains_key(&root) {
            return Err(DomainError::InvalidTree(format!(
                "root '{root}' must not have a parent"
            )));
        }
        let tree = ClassificationTree { root, parent };
        for (child, par) in &tree.parent {
            if par != &tree.root && !tree.parent.contains_key(par) {
                return Err(DomainError::InvalidTree(format!(
                    "parent '{par}' of '{child}' is not a node"
                )));
            }
            // Walking up must terminate at the root; a cycle would loop longer
            // than the node count.
            let mut cur = child;
            let mut steps = 0usize;
            while cur != &tree.root {
                cur = tree.parent.get(cur).ok_or_else(|| {
                    DomainError::InvalidTree(format!("node '{cur}' detached from root"))
                })?;
                steps += 1;
                if steps > tree.parent.len() {
                    return Err(DomainError::InvalidTree(format!(
                        "cycle through node '{child}'"
                    )));
                }
            }
        }
        Ok(tree)
    }

    /// Default vehicle hierarchy:
    /// unknown -> {tracked, wheeled}; tracked -> {mbt, apc_tracked, atgm_launcher}.
    pub fn default_vehicles() -> Self {
        let mut parent = BTreeMap::new();
        for (child, par) in [
            ("tracked", "unknown"),
            ("wheeled", "unknown"),
            ("mbt", "tracked"),
            ("apc_tracked", "tracked"),
            ("atgm_launcher", "tracked"),
        ] {
            parent.insert(ClassId::from(child), ClassId::from(par));
        }
        ClassificationTree::new(ClassId::from("unknown"), parent).expect("default tree is valid")
    }

    pub fn root(&self) -> &ClassId {
        &self.root
    }

    pub fn contains(&self, id: &ClassId) -> bool {
        id == &self.root || self.parent.contains_key(id)
    }

    pub fn node_count(&self) -> usize {
        self.parent.len() + 1
    }

    /// Distance from the root (root itself has depth 0).
    pub fn depth(&self, id: &ClassId) -> Result<usize, DomainError> {
        self.check(id)?;
        let mut d = 0;
        let mut cur = id;
        while cur != &self.root {
            cur = &self.parent[cur];
            d += 1;
        }
        Ok(d)
    }

    /// Walk `id` towards the root until its depth is at most `depth`.
    pub fn truncate_to_depth(&self, id: &ClassId, depth: usize) -> Result<ClassId, DomainError> {
        let mut cur = id;
        let mut d = self.depth(id)?;
        while d > depth {
            cur = &self.parent[cur];
            d -= 1;
        }
        Ok(cur.clone())
    }

    /// True iff one class lies on the other's path to the root (either
    /// direction, including equality).
    pub fn is_descendant(&self, a: &ClassId, b: &ClassId) -> Result<bool, DomainError> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.on_root_path(a, b) || self.on_root_path(b, a))
    }

    /// True iff `anc` is `node` or an ancestor of `node`.
    pub fn is_ancestor_or_self(&self, anc: &ClassId, node: &ClassId) -> Result<bool, DomainError> {
        self.check(anc)?;
        self.check(node)?;
        Ok(self.on_root_path(anc, node))
    }

    fn on_root_path(&self, anc: &ClassId, node: &ClassId) -> bool {
        let mut cur = node;
        loop {
            if cur == anc {
                return true;
            }
            match self.parent.get(cur) {
                Some(p) => cur = p,
                None => return false,
            }
        }
    }

    /// Deepest (most specific) class among pairwise ancestor-related classes.
    pub fn resolve_class<'a, I>(&self, classes: I) -> Result<ClassId, DomainError>
    where
        I: IntoIterator<Item = &'a ClassId>,
    {
        let mut deepest: Option<(&ClassId, usize)> = None;
        for c in classes {
            let d = self.depth(c)?;
            match deepest {
                None => deepest = Some((c, d)),
                Some((best, best_d)) => {
                    if !self.is_descendant(best, c)? {
                        return Err(DomainError::UnrelatedClasses {
                            a: best.clone(),
                            b: c.clone(),
                        });
                    }
                    if d > best_d {
                        deepest = Some((c, d));
                    }
                }
            }
        }
        match deepest {
            Some((c, _)) => Ok(c.clone()),
            None => Err(DomainError::InvalidTree("no classes to resolve".into())),
        }
    }

    fn check(&self, id: &ClassId) -> Result<(), DomainError> {
        if self.contains(id) {
            Ok(())
        } else {
            Err(DomainError::UnknownClass(id.clone()))
        }
    }
}

/// Tree with a literal `tank` leaf under `tracked`, as seen by a sensor that
/// refines unknown -> tracked -> tank. Test fixture shared across modules.
#[cfg(test)]
pub(crate) fn tank_tree() -> ClassificationTree {
    let mut parent = BTreeMap::new();
    for (child, par) in [
        ("tracked", "unknown"),
        ("wheeled", "unknown"),
        ("tank", "tracked"),
        ("apc_tracked", "tracked"),
    ] {
        parent.insert(ClassId::from(child), ClassId::from(par));
    }
    ClassificationTree::new(ClassId::from("unknown"), parent).unwrap()
}
