use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::tokenize::{is_decimal_numeral, tokenize};
use crate::error::{ForgeError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataType {
    Text,
    Number,
}

/// Position of a column: table index within the schema, column index within
/// the table. Serialized as `[table, column]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "(usize, usize)", into = "(usize, usize)")]
pub struct ColumnRef {
    pub table: usize,
    pub column: usize,
}

impl ColumnRef {
    pub fn new(table: usize, column: usize) -> Self {
        ColumnRef { table, column }
    }
}

impl From<(usize, usize)> for ColumnRef {
    fn from((table, column): (usize, usize)) -> Self {
        ColumnRef { table, column }
    }
}

impl From<ColumnRef> for (usize, usize) {
    fn from(c: ColumnRef) -> Self {
        (c.table, c.column)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    #[serde(rename = "type")]
    pub data_type: DataType,
    #[serde(default)]
    pub values: Vec<String>,
}

impl Column {
    pub fn new(name: impl Into<String>, data_type: DataType) -> Self {
        Column {
            name: name.into(),
            data_type,
            values: Vec::new(),
        }
    }

    pub fn with_values<I, S>(mut self, values: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.values = values.into_iter().map(Into::into).collect();
        self
    }

    pub fn tokens(&self) -> Vec<String> {
        tokenize(&self.name)
    }

    /// Tokens of every cell value, in value order.
    pub fn value_tokens(&self) -> Vec<String> {
        self.values.iter().flat_map(|v| tokenize(v)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<Column>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: Vec<Column>) -> Self {
        Table {
            name: name.into(),
            columns,
        }
    }
}

/// A relational database description. Construction through [`Schema::new`]
/// or deserialization always validates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSchema")]
pub struct Schema {
    pub schema_id: String,
    pub tables: Vec<Table>,
    #[serde(default)]
    pub foreign_keys: Vec<(ColumnRef, ColumnRef)>,
}

/// Schema as written on disk, before validation.
#[derive(Deserialize)]
pub(crate) struct RawSchema {
    pub(crate) schema_id: String,
    tables: Vec<Table>,
    #[serde(default)]
    foreign_keys: Vec<(ColumnRef, ColumnRef)>,
}

impl TryFrom<RawSchema> for Schema {
    type Error = ForgeError;

    fn try_from(raw: RawSchema) -> Result<Self> {
        raw.into_schema()
    }
}

impl RawSchema {
    pub(crate) fn into_schema(self) -> Result<Schema> {
        Schema::new(self.schema_id, self.tables, self.foreign_keys)
    }
}

impl Schema {
    pub fn new(
        schema_id: impl Into<String>,
        tables: Vec<Table>,
        foreign_keys: Vec<(ColumnRef, ColumnRef)>,
    ) -> Result<Self> {
        let schema = Schema {
            schema_id: schema_id.into(),
            tables,
            foreign_keys,
        };
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| ForgeError::InvalidSchema {
            schema_id: self.schema_id.clone(),
            msg,
        };
        let mut table_names = HashSet::new();
        for table in &self.tables {
            if !table_names.insert(table.name.to_lowercase()) {
                return Err(fail(format!("duplicate table name {:?}", table.name)));
            }
            if table.columns.is_empty() {
                return Err(fail(format!("table {:?} has no columns", table.name)));
            }
            let mut column_names = HashSet::new();
            for column in &table.columns {
                if !column_names.insert(column.name.to_lowercase()) {
                    return Err(fail(format!(
                        "duplicate column {:?} in table {:?}",
                        column.name, table.name
                    )));
                }
                if column.data_type == DataType::Number {
                    if let Some(bad) = column.values.iter().find(|v| !is_decimal_numeral(v)) {
                        return Err(fail(format!(
                            "number column {}.{} has non-numeric value {bad:?}",
                            table.name, column.name
                        )));
                    }
                }
            }
        }
        for (a, b) in &self.foreign_keys {
            for end in [a, b] {
                if self.try_column(*end).is_none() {
                    return Err(fail(format!(
                        "foreign key endpoint [{}, {}] does not resolve",
                        end.table, end.column
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn try_column(&self, c: ColumnRef) -> Option<&Column> {
        self.tables.get(c.table)?.columns.get(c.column)
    }

    /// Panics on an unresolved reference; callers hold references that were
    /// resolved against this schema.
    pub fn column(&self, c: ColumnRef) -> &Column {
        self.try_column(c)
            .unwrap_or_else(|| panic!("column [{}, {}] not in schema {}", c.table, c.column, self.schema_id))
    }

    pub fn table_name(&self, table: usize) -> &str {
        &self.tables[table].name
    }

    pub fn qualified_name(&self, c: ColumnRef) -> String {
        format!("{}.{}", self.tables[c.table].name, self.column(c).name)
    }

    /// All columns in declaration order: table order, then column order.
    pub fn columns(&self) -> impl Iterator<Item = (ColumnRef, &Column)> {
        self.tables.iter().enumerate().flat_map(|(ti, t)| {
            t.columns
                .iter()
                .enumerate()
                .map(move |(ci, c)| (ColumnRef::new(ti, ci), c))
        })
    }

    pub fn column_count(&self) -> usize {
        self.tables.iter().map(|t| t.columns.len()).sum()
    }

    /// Total number of column-name tokens.
    pub fn column_token_count(&self) -> usize {
        self.columns().map(|(_, c)| c.tokens().len()).sum()
    }

    pub fn find_table(&self, name: &str) -> Option<usize> {
        let lower = name.to_lowercase();
        self.tables.iter().position(|t| t.name.to_lowercase() == lower)
    }

    pub fn find_column(&self, table: usize, name: &str) -> Option<ColumnRef> {
        let lower = name.to_lowercase();
        self.tables[table]
            .columns
            .iter()
            .position(|c| c.name.to_lowercase() == lower)
            .map(|ci| ColumnRef::new(table, ci))
    }

    /// Whether two columns are linked by a declared foreign key (either
    /// direction) or share a name.
    pub fn joinable(&self, a: ColumnRef, b: ColumnRef) -> bool {
        a.table != b.table
            && (self
                .foreign_keys
                .iter()
                .any(|&(x, y)| (x == a && y == b) || (x == b && y == a))
                || self.column(a).name.to_lowercase() == self.column(b).name.to_lowercase())
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.schema_id)?;
        for (i, t) in self.tables.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            let cols: Vec<&str> = t.columns.iter().map(|c| c.name.as_str()).collect();
            write!(f, "{}: {}", t.name, cols.join(", "))?;
        }
        write!(f, ")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn student() -> Schema {
        Schema::new(
            "school",
            vec![
                Table::new(
                    "student",
                    vec![
                        Column::new("id", DataType::Number),
                        Column::new("name", DataType::Text).with_values(["dannie"]),
                    ],
                ),
                Table::new("pet", vec![Column::new("id", DataType::Number)]),
            ],
            vec![(ColumnRef::new(0, 0), ColumnRef::new(1, 0))],
        )
        .unwrap()
    }

    #[test]
    fn json_keys_are_bit_exact() {
        let s = student();
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(
            json,
            r#"{"schema_id":"school","tables":[{"name":"student","columns":[{"name":"id","type":"number","values":[]},{"name":"name","type":"text","values":["dannie"]}]},{"name":"pet","columns":[{"name":"id","type":"number","values":[]}]}],"foreign_keys":[[[0,0],[1,0]]]}"#
        );
        assert_eq!(Schema::from_json(&json).unwrap(), s);
    }

    #[test]
    fn rejects_duplicate_names_case_insensitively() {
        let err = Schema::new(
            "x",
            vec![
                Table::new("A", vec![Column::new("c", DataType::Text)]),
                Table::new("a", vec![Column::new("c", DataType::Text)]),
            ],
            vec![],
        )
        .unwrap_err();
        assert!(err.to_string().contains("duplicate table"));

        let err = Schema::new(
            "x",
            vec![Table::new(
                "t",
                vec![Column::new("C", DataType::Text), Column::new("c", DataType::Text)],
            )],
            vec![],
        )
        .unwrap_err();
        assert!(err.to_string().contains("duplicate column"));
    }

    #[test]
    fn rejects_empty_tables_bad_numbers_and_dangling_keys() {
        assert!(Schema::new("x", vec![Table::new("t", vec![])], vec![]).is_err());
        let bad_value = Schema::new(
            "x",
            vec![Table::new(
                "t",
                vec![Column::new("n", DataType::Number).with_values(["12", "twelve"])],
            )],
            vec![],
        );
        assert!(bad_value.unwrap_err().to_string().contains("non-numeric"));
        let dangling = Schema::new(
            "x",
            vec![Table::new("t", vec![Column::new("n", DataType::Number)])],
            vec![(ColumnRef::new(0, 0), ColumnRef::new(0, 3))],
        );
        assert!(dangling.is_err());
        let json = r#"{"schema_id":"x","tables":[{"name":"t","columns":[]}],"foreign_keys":[]}"#;
        assert!(Schema::from_json(json).is_err());
    }

    #[test]
    fn joinable_by_key_or_shared_name() {
        let s = student();
        assert!(s.joinable(ColumnRef::new(0, 0), ColumnRef::new(1, 0)));
        assert!(!s.joinable(ColumnRef::new(0, 1), ColumnRef::new(1, 0)));
        assert!(!s.joinable(ColumnRef::new(0, 0), ColumnRef::new(0, 0)));
    }
}
