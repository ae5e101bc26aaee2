use std::collections::BTreeSet;

use super::*;
use crate::error::ForgeError;
use crate::model::{Column, ColumnRef, DataType, Schema, Table};

fn student() -> Schema {
    Schema::new(
        "school",
        vec![Table::new(
            "student",
            vec![
                Column::new("name", DataType::Text).with_values(["dannie", "lee"]),
                Column::new("height", DataType::Number).with_values(["180", "165.5"]),
                Column::new("age", DataType::Number),
            ],
        )],
        vec![],
    )
    .unwrap()
}

fn pets() -> Schema {
    Schema::new(
        "pets",
        vec![
            Table::new(
                "Student",
                vec![
                    Column::new("StuID", DataType::Number),
                    Column::new("Age", DataType::Number),
                ],
            ),
            Table::new(
                "Has_Pet",
                vec![
                    Column::new("StuID", DataType::Number),
                    Column::new("PetID", DataType::Number),
                ],
            ),
            Table::new(
                "Pets",
                vec![
                    Column::new("PetID", DataType::Number),
                    Column::new("weight", DataType::Number),
                    Column::new("pet_age", DataType::Number),
                ],
            ),
        ],
        vec![(ColumnRef::new(1, 0), ColumnRef::new(0, 0))],
    )
    .unwrap()
}

#[test]
fn parses_aggregate_select() {
    let s = student();
    let q = parse_sql("SELECT MAX(height) FROM student", &s).unwrap();
    assert_eq!(q.select, [AggExpr::agg(Agg::Max, ColumnRef::new(0, 1))]);
    assert_eq!(q.from, [0]);
    assert!(q.where_.is_empty());
}

#[test]
fn parses_star_and_limit() {
    let s = Schema::new("t", vec![Table::new("t", vec![Column::new("a", DataType::Text)])], vec![]).unwrap();
    let q = parse_sql("SELECT * FROM t LIMIT 1", &s).unwrap();
    assert_eq!(q.select, [AggExpr::star()]);
    assert_eq!(q.limit, Some(1));
}

#[test]
fn unknown_column_is_reported() {
    let err = parse_sql("SELECT h FROM student", &student()).unwrap_err();
    assert!(matches!(err, ForgeError::UnknownColumn(ref c) if c == "h"), "{err}");
}

#[test]
fn syntax_errors_carry_position() {
    match parse_sql("SELECT height FORM student", &student()).unwrap_err() {
        ForgeError::Syntax { pos, .. } => assert_eq!(pos, 14),
        other => panic!("{other}"),
    }
}

#[test]
fn literal_type_mismatch() {
    let err = parse_sql("SELECT name FROM student WHERE height = 'tall'", &student()).unwrap_err();
    assert!(matches!(err, ForgeError::TypeMismatch(_)), "{err}");
    let err = parse_sql("SELECT name FROM student WHERE name LIKE 3", &student()).unwrap_err();
    assert!(matches!(err, ForgeError::TypeMismatch(_)), "{err}");
}

#[test]
fn nesting_is_capped() {
    let s = student();
    let ok = "SELECT name FROM student WHERE age IN (SELECT age FROM student WHERE height IN (SELECT height FROM student))";
    assert_eq!(parse_sql(ok, &s).unwrap().depth(), 2);
    let deep = "SELECT name FROM student WHERE age IN (SELECT age FROM student WHERE height IN (SELECT height FROM student WHERE age IN (SELECT age FROM student)))";
    assert!(matches!(
        parse_sql(deep, &s).unwrap_err(),
        ForgeError::NestingTooDeep { max: 2 }
    ));
}

#[test]
fn having_requires_group_by() {
    let err = parse_sql("SELECT name FROM student HAVING COUNT(*) > 1", &student()).unwrap_err();
    assert!(matches!(err, ForgeError::InvalidQuery(_)), "{err}");
}

#[test]
fn case_insensitive_keywords_and_canonical_render() {
    let s = student();
    let q = parse_sql("select max(height) from student", &s).unwrap();
    assert_eq!(render_sql(&q, &s), "SELECT MAX(student.height) FROM student");
}

#[test]
fn between_renders_with_and() {
    let s = student();
    let q = parse_sql("SELECT name FROM student WHERE age BETWEEN 1 AND 2", &s).unwrap();
    let text = render_sql(&q, &s);
    assert_eq!(text, "SELECT student.name FROM student WHERE student.age BETWEEN 1 AND 2");
    assert_eq!(parse_sql(&text, &s).unwrap(), q);
}

#[test]
fn empty_where_renders_no_keyword() {
    let s = student();
    let q = parse_sql("SELECT name FROM student", &s).unwrap();
    assert!(!render_sql(&q, &s).contains("WHERE"));
}

#[test]
fn spider_style_aliases_and_subqueries() {
    let s = pets();
    let sql = "SELECT avg(T1.Age) FROM Student AS T1 WHERE T1.StuID NOT IN (SELECT StuID FROM Has_Pet)";
    let q = parse_sql(sql, &s).unwrap();
    assert_eq!(q.where_[0].op, CondOp::NotIn);
    assert_eq!(
        render_sql(&q, &s),
        "SELECT AVG(Student.Age) FROM Student WHERE Student.StuID NOT IN (SELECT Has_Pet.StuID FROM Has_Pet)"
    );

    let sql = "SELECT T2.weight FROM Has_Pet AS T1 JOIN Pets AS T2 ON T1.PetID = T2.PetID ORDER BY T2.pet_age asc LIMIT 1";
    let q = parse_sql(sql, &s).unwrap();
    assert_eq!(q.joins.len(), 1);
    assert_eq!(q.order_by.unwrap().direction, Direction::Asc);
    let text = render_sql(&q, &s);
    assert_eq!(parse_sql(&text, &s).unwrap(), q);
}

#[test]
fn ambiguous_and_unjoinable() {
    let s = pets();
    let err = parse_sql("SELECT StuID FROM Student JOIN Has_Pet ON Student.StuID = Has_Pet.StuID", &s).unwrap_err();
    assert!(matches!(err, ForgeError::AmbiguousColumn(_)), "{err}");
    let err = parse_sql("SELECT Age FROM Student JOIN Pets ON Student.Age = Pets.weight", &s).unwrap_err();
    assert!(matches!(err, ForgeError::InvalidQuery(_)), "{err}");
}

#[test]
fn quoted_identifiers_round_trip() {
    let s = Schema::new(
        "q",
        vec![Table::new(
            "order",
            vec![
                Column::new("pet age", DataType::Number),
                Column::new("count", DataType::Text).with_values(["it's"]),
            ],
        )],
        vec![],
    )
    .unwrap();
    let q = parse_sql("SELECT `pet age` FROM `order` WHERE `count` = 'it''s'", &s).unwrap();
    let text = render_sql(&q, &s);
    assert_eq!(text, "SELECT `order`.`pet age` FROM `order` WHERE `order`.`count` = 'it''s'");
    assert_eq!(parse_sql(&text, &s).unwrap(), q);
}

#[test]
fn rejects_unsupported_constructs() {
    let s = student();
    for sql in [
        "SELECT name FROM student WHERE age > 1 OR age < 0",
        "SELECT name FROM student UNION SELECT name FROM student",
        "SELECT DISTINCT name FROM student",
        "SELECT name FROM student WHERE",
    ] {
        assert!(matches!(parse_sql(sql, &s), Err(ForgeError::Syntax { .. })), "{sql}");
    }
}

fn config(seed: u64) -> GrammarConfig {
    GrammarConfig {
        seed,
        ..GrammarConfig::default()
    }
}

#[test]
fn select_where_pattern_only() {
    let s = pets();
    let mut cfg = config(11);
    cfg.clauses = [Clause::Select, Clause::Where].into_iter().collect();
    let mut sampler = SqlSampler::new(cfg).unwrap();
    for _ in 0..500 {
        let q = sampler.sample(&s).unwrap();
        assert_eq!(q.clauses(), [Clause::Select, Clause::Where]);
    }
}

#[test]
fn no_joins_when_disabled() {
    let s = pets();
    let mut cfg = config(5);
    cfg.max_joins = 0;
    let mut sampler = SqlSampler::new(cfg).unwrap();
    for _ in 0..2000 {
        let q = sampler.sample(&s).unwrap();
        assert!(q.walk().iter().all(|q| q.joins.is_empty()));
    }
}

#[test]
fn forced_numeric_aggregation_needs_number_columns() {
    let text_only = Schema::new(
        "t",
        vec![Table::new("t", vec![Column::new("a", DataType::Text)])],
        vec![],
    )
    .unwrap();
    let mut cfg = config(1);
    cfg.force_numeric_agg = true;
    assert!(matches!(
        sample_sql(&text_only, &cfg),
        Err(ForgeError::Unsatisfiable(_))
    ));
    let q = sample_sql(&student(), &cfg).unwrap();
    assert!(q.select.iter().all(|e| e.agg.is_numeric()));
}

#[test]
fn sampler_is_deterministic() {
    let s = pets();
    let run = |seed| {
        let mut sampler = SqlSampler::new(config(seed)).unwrap();
        (0..50).map(|_| sampler.sample(&s).unwrap()).collect::<Vec<_>>()
    };
    assert_eq!(run(3), run(3));
    assert_ne!(run(3), run(4));
}

#[test]
fn invalid_configs_rejected() {
    let mut cfg = config(0);
    cfg.max_conditions = 0;
    assert!(SqlSampler::new(cfg).is_err());
    let mut cfg = config(0);
    cfg.subquery_probability = 1.5;
    assert!(SqlSampler::new(cfg).is_err());
    let mut cfg = config(0);
    cfg.clauses = BTreeSet::new();
    assert!(SqlSampler::new(cfg).is_err());
}

#[test]
fn template_questions() {
    let s = student();
    let q = parse_sql("SELECT MAX(height) FROM student", &s).unwrap();
    assert_eq!(synthesize_question(&q, &s), "show the maximum height of student");
    let q = parse_sql("SELECT MAX(height) FROM student WHERE age > 10", &s).unwrap();
    assert_eq!(
        synthesize_question(&q, &s),
        "show the maximum height of student where age is greater than 10"
    );
    let q = parse_sql("SELECT * FROM student", &s).unwrap();
    assert_eq!(synthesize_question(&q, &s), "show all rows of student");
    let q = parse_sql("SELECT name FROM student ORDER BY height DESC LIMIT 1", &s).unwrap();
    assert!(synthesize_question(&q, &s).ends_with("with the top 1 by height descending"));
}
