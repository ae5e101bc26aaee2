use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ForgeError;
use crate::model::ColumnRef;

/// Head name used for LIMIT values, which have no column.
pub const LIMIT_HEAD: &str = "__limit__";

/// The 17 schema-dependency labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DependencyType {
    None,
    SelectMention,
    SelectAgg,
    JoinMention,
    WhereMention,
    WhereOp,
    WhereValue,
    GroupByMention,
    GroupByAgg,
    HavingMention,
    HavingAgg,
    HavingOp,
    HavingValue,
    OrderByMention,
    OrderByAgg,
    OrderByOrder,
    LimitValue,
}

impl DependencyType {
    pub const COUNT: usize = 17;

    pub const ALL: [DependencyType; 17] = [
        DependencyType::None,
        DependencyType::SelectMention,
        DependencyType::SelectAgg,
        DependencyType::JoinMention,
        DependencyType::WhereMention,
        DependencyType::WhereOp,
        DependencyType::WhereValue,
        DependencyType::GroupByMention,
        DependencyType::GroupByAgg,
        DependencyType::HavingMention,
        DependencyType::HavingAgg,
        DependencyType::HavingOp,
        DependencyType::HavingValue,
        DependencyType::OrderByMention,
        DependencyType::OrderByAgg,
        DependencyType::OrderByOrder,
        DependencyType::LimitValue,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DependencyType::None => "None",
            DependencyType::SelectMention => "SELECT-Mention",
            DependencyType::SelectAgg => "SELECT-Agg",
            DependencyType::JoinMention => "JOIN-Mention",
            DependencyType::WhereMention => "WHERE-Mention",
            DependencyType::WhereOp => "WHERE-Op",
            DependencyType::WhereValue => "WHERE-Value",
            DependencyType::GroupByMention => "GROUP-BY-Mention",
            DependencyType::GroupByAgg => "GROUP-BY-Agg",
            DependencyType::HavingMention => "HAVING-Mention",
            DependencyType::HavingAgg => "HAVING-Agg",
            DependencyType::HavingOp => "HAVING-Op",
            DependencyType::HavingValue => "HAVING-Value",
            DependencyType::OrderByMention => "ORDER-BY-Mention",
            DependencyType::OrderByAgg => "ORDER-BY-Agg",
            DependencyType::OrderByOrder => "ORDER-BY-Order",
            DependencyType::LimitValue => "LIMIT-Value",
        }
    }

    /// Position in [`DependencyType::ALL`]; the class index for label scoring.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// Clause family prefix, e.g. `GROUP-BY` for `GROUP-BY-Agg`.
    pub fn family(self) -> &'static str {
        let name = self.name();
        name.rsplit_once('-').map_or(name, |(f, _)| f)
    }
}

impl fmt::Display for DependencyType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DependencyType {
    type Err = ForgeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| ForgeError::contract(format!("unknown dependency type {s:?}")))
    }
}

impl Serialize for DependencyType {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for DependencyType {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Edge head: a schema column, or the LIMIT pseudo-head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Head {
    Column(ColumnRef),
    Limit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DependencyEdge {
    pub head: Head,
    /// Half-open question token range.
    pub span: Range<usize>,
    pub label: DependencyType,
    /// Match confidence in (0, 1].
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DependencyGraph {
    pub edges: Vec<DependencyEdge>,
}

impl DependencyGraph {
    /// Adds an edge; a repeated (head, span, label) keeps the higher score.
    pub fn add(&mut self, edge: DependencyEdge) {
        assert!(edge.label != DependencyType::None, "None is never stored");
        assert!(!edge.span.is_empty(), "empty dependency span");
        match self
            .edges
            .iter_mut()
            .find(|e| e.head == edge.head && e.span == edge.span && e.label == edge.label)
        {
            Some(existing) => existing.score = existing.score.max(edge.score),
            None => self.edges.push(edge),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }
}
