use std::collections::{BTreeMap, HashSet};

use crate::model::{ColumnRef, Schema, Table};

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

fn column_names(schema: &Schema) -> HashSet<String> {
    schema.columns().map(|(_, c)| c.name.to_lowercase()).collect()
}

/// Groups schemas whose tables share at least one column name (compared
/// case-insensitively, transitively) into merged multi-table schemas. Every
/// shared-name column pair across two tables of a group becomes a foreign
/// key. Schemas without a partner pass through unchanged.
///
/// Output order follows the first member of each group in input order.
pub fn compose_multitable(schemas: &[Schema]) -> Vec<Schema> {
    let n = schemas.len();
    let names: Vec<HashSet<String>> = schemas.iter().map(column_names).collect();
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in i + 1..n {
            if !names[i].is_disjoint(&names[j]) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(i);
    }

    groups
        .into_values()
        .map(|members| {
            if members.len() == 1 {
                return schemas[members[0]].clone();
            }
            merge(members.iter().map(|&i| &schemas[i]))
        })
        .collect()
}

fn merge<'a>(members: impl Iterator<Item = &'a Schema>) -> Schema {
    let mut ids = Vec::new();
    let mut tables: Vec<Table> = Vec::new();
    let mut foreign_keys = Vec::new();
    let mut taken: HashSet<String> = HashSet::new();
    for schema in members {
        ids.push(schema.schema_id.clone());
        let offset = tables.len();
        for table in &schema.tables {
            let mut table = table.clone();
            let base = table.name.clone();
            let mut k = 2;
            while taken.contains(&table.name.to_lowercase()) {
                table.name = format!("{base}_{k}");
                k += 1;
            }
            taken.insert(table.name.to_lowercase());
            tables.push(table);
        }
        for &(a, b) in &schema.foreign_keys {
            foreign_keys.push((
                ColumnRef::new(a.table + offset, a.column),
                ColumnRef::new(b.table + offset, b.column),
            ));
        }
    }
    for i in 0..tables.len() {
        for j in i + 1..tables.len() {
            for (ci, a) in tables[i].columns.iter().enumerate() {
                for (cj, b) in tables[j].columns.iter().enumerate() {
                    if a.name.to_lowercase() == b.name.to_lowercase() {
                        foreign_keys.push((ColumnRef::new(i, ci), ColumnRef::new(j, cj)));
                    }
                }
            }
        }
    }
    Schema::new(ids.join("+"), tables, foreign_keys).expect("merging valid schemas stays valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Column, DataType};

    fn single(id: &str, table: &str, cols: &[&str]) -> Schema {
        Schema::new(
            id,
            vec![Table::new(
                table,
                cols.iter().map(|c| Column::new(*c, DataType::Text)).collect(),
            )],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn shared_name_becomes_foreign_key() {
        let out = compose_multitable(&[single("a", "A", &["id", "name"]), single("b", "B", &["ID", "score"])]);
        assert_eq!(out.len(), 1);
        let merged = &out[0];
        assert_eq!(merged.schema_id, "a+b");
        assert_eq!(merged.tables.len(), 2);
        assert_eq!(merged.foreign_keys, [(ColumnRef::new(0, 0), ColumnRef::new(1, 0))]);
    }

    #[test]
    fn disjoint_tables_pass_through() {
        let input = [single("a", "A", &["x"]), single("b", "B", &["y"])];
        assert_eq!(compose_multitable(&input), input.to_vec());
    }

    #[test]
    fn clashing_table_names_are_suffixed() {
        let out = compose_multitable(&[single("a", "t", &["k"]), single("b", "T", &["k"])]);
        let names: Vec<&str> = out[0].tables.iter().map(|t| t.name.as_str()).collect();
        assert_eq!(names, ["t", "T_2"]);
    }
}
