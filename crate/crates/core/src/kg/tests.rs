use super::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet, HashSet};

pub(crate) const TOY_TABLE: &str = "\
subject,relation,object,subject_type,object_type,link_type
Orla,born,London,person,city,True
Orla,has,cholesterol,person,disease,True
Paul,born,New York,person,city,True
Paul,has,diabetes,person,disease,False
";

#[test]
fn toy_table_ids_follow_sequential_assignment() {
    let kg = load_triple_table(TOY_TABLE.as_bytes()).unwrap();
    assert_eq!(kg.node_count(), 6);
    assert_eq!(kg.edge_count(), 4);
    let id = |name: &str| kg.node_id(name).unwrap().0;
    assert_eq!(id("Orla"), 0);
    assert_eq!(id("Paul"), 1);
    assert_eq!(id("London"), 2);
    assert_eq!(id("cholesterol"), 3);
    assert_eq!(id("New York"), 4);
    assert_eq!(id("diabetes"), 5);
    assert_eq!(kg.schema().relation_id("born").unwrap().0, 0);
    assert_eq!(kg.schema().relation_id("has").unwrap().0, 1);
    let labels: Vec<f64> = kg.edges().iter().map(|e| e.polarity.label()).collect();
    assert_eq!(labels, vec![1.0, 1.0, 1.0, 0.0]);
}

#[test]
fn empty_table_loads_empty_graph() {
    let kg = load_triple_table(
        "subject,relation,object,subject_type,object_type,link_type\n".as_bytes(),
    )
    .unwrap();
    assert_eq!(kg.node_count(), 0);
    assert_eq!(kg.edge_count(), 0);
}

#[test]
fn bad_link_type_is_malformed() {
    let table = "subject,relation,object,subject_type,object_type,link_type\na,r,b,t,t,true\n";
    let err = load_triple_table(table.as_bytes()).unwrap_err();
    assert!(matches!(err, KgError::MalformedRow { row: 1, .. }), "{err}");
}

#[test]
fn node_reused_with_second_type_is_rejected() {
    let table = "subject,relation,object,subject_type,object_type,link_type\n\
                 a,r,b,t1,t2,True\n\
                 b,r2,c,t3,t2,True\n";
    let err = load_triple_table(table.as_bytes()).unwrap_err();
    assert!(matches!(err, KgError::NodeTypeConflict { .. }), "{err}");
}

#[test]
fn duplicate_triple_is_rejected() {
    let table = "subject,relation,object,subject_type,object_type,link_type\n\
                 a,r,b,t1,t2,True\n\
                 a,r,b,t1,t2,False\n";
    let err = load_triple_table(table.as_bytes()).unwrap_err();
    assert!(matches!(err, KgError::DuplicateTriple { .. }), "{err}");
}

#[test]
fn relation_with_inconsistent_types_is_rejected() {
    let table = "subject,relation,object,subject_type,object_type,link_type\n\
                 a,r,b,t1,t2,True\n\
                 c,r,d,t1,t3,True\n";
    let err = load_triple_table(table.as_bytes()).unwrap_err();
    assert!(matches!(err, KgError::InconsistentRelationTypes { .. }), "{err}");
}

/// Canonical multiset of rows for table-equivalence checks.
fn sorted_rows(table: &str) -> Vec<Vec<String>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(table.as_bytes());
    let mut rows: Vec<Vec<String>> = reader
        .records()
        .map(|r| r.unwrap().iter().map(|f| f.to_string()).collect())
        .collect();
    rows.sort();
    rows
}

fn random_table(seed: u64, rows: usize) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Node names carry their type in the name so types never conflict.
    let types = ["alpha", "beta", "gamma"];
    let mut out = String::from("subject,relation,object,subject_type,object_type,link_type\n");
    let mut seen = HashSet::new();
    let mut emitted = 0;
    while emitted < rows {
        let s_ty = types[rng.random_range(0..types.len())];
        let o_ty = types[rng.random_range(0..types.len())];
        // One relation per type pair keeps signatures consistent.
        let relation = format!("rel-{s_ty}-{o_ty}");
        let subject = format!("{s_ty}{}", rng.random_range(0..12));
        let object = format!("{o_ty}{}", rng.random_range(0..12));
        if !seen.insert((subject.clone(), relation.clone(), object.clone())) {
            continue;
        }
        let link = if rng.random::<f64>() < 0.8 { "True" } else { "False" };
        out.push_str(&format!("{subject},{relation},{object},{s_ty},{o_ty},{link}\n"));
        emitted += 1;
    }
    out
}

#[test]
fn load_serialize_round_trip_preserves_rows() {
    for seed in 0..5u64 {
        let table = random_table(seed, 100);
        let kg = load_triple_table(table.as_bytes()).unwrap();
        let mut serialized = Vec::new();
        write_triple_table(&kg, &mut serialized).unwrap();
        let serialized = String::from_utf8(serialized).unwrap();
        assert_eq!(sorted_rows(&table), sorted_rows(&serialized));

        // Reloading the serialized table is the identity on ids too.
        let reloaded = load_triple_table(serialized.as_bytes()).unwrap();
        assert_eq!(kg, reloaded);
    }
}

proptest! {
    #[test]
    fn round_trip_is_identity_on_random_tables(seed in 0u64..500) {
        let table = random_table(seed, 40);
        let kg = load_triple_table(table.as_bytes()).unwrap();
        let mut serialized = Vec::new();
        write_triple_table(&kg, &mut serialized).unwrap();
        let reloaded = load_triple_table(&serialized[..]).unwrap();
        prop_assert_eq!(kg, reloaded);
    }
}

// ---------------------------------------------------------------------------
// Synthea ingestion

fn synthea_fixture(
    patients: &[&str],
    encounters: &[(&str, &str, &str)],
    conditions: &[(&str, &str)],
    observations: &[(&str, &str)],
) -> Result<KnowledgeGraph, KgError> {
    let patients_csv = format!(
        "Id,BIRTHDATE,FIRST,LAST\n{}",
        patients
            .iter()
            .map(|p| format!("{p},1980-01-01,A,B\n"))
            .collect::<String>()
    );
    let encounters_csv = format!(
        "Id,START,STOP,PATIENT,ENCOUNTERCLASS,CODE,DESCRIPTION\n{}",
        encounters
            .iter()
            .map(|(id, patient, class)| format!("{id},2020,2020,{patient},{class},1,visit\n"))
            .collect::<String>()
    );
    let conditions_csv = format!(
        "START,STOP,PATIENT,ENCOUNTER,CODE,DESCRIPTION\n{}",
        conditions
            .iter()
            .map(|(enc, desc)| format!("2020,2020,p,{enc},1,{desc}\n"))
            .collect::<String>()
    );
    let observations_csv = format!(
        "DATE,PATIENT,ENCOUNTER,CODE,DESCRIPTION,VALUE,UNITS\n{}",
        observations
            .iter()
            .map(|(enc, desc)| format!("2020,p,{enc},1,{desc},1,u\n"))
            .collect::<String>()
    );
    ingest_clinical_csv(SyntheaStreams {
        patients: patients_csv.as_bytes(),
        encounters: encounters_csv.as_bytes(),
        conditions: conditions_csv.as_bytes(),
        observations: observations_csv.as_bytes(),
    })
}

#[test]
fn minimal_record_ingests_to_four_nodes_three_edges() {
    let kg = synthea_fixture(
        &["p1"],
        &[("e1", "p1", "wellness")],
        &[("e1", "Sinusitis")],
        &[],
    )
    .unwrap();
    assert_eq!(kg.node_count(), 4);
    assert_eq!(kg.edge_count(), 3);
    assert!(kg.edges().iter().all(|e| e.polarity.is_positive()));
}

#[test]
fn unknown_encounter_class_names_offending_row() {
    let err = synthea_fixture(&["p1"], &[("e1", "p1", "urgentcare")], &[], &[]).unwrap_err();
    match err {
        KgError::UnknownEncounterClass { row, class } => {
            assert_eq!(row, 1);
            assert_eq!(class, "urgentcare");
        }
        other => panic!("unexpected error {other}"),
    }
}

#[test]
fn condition_for_unknown_encounter_is_rejected() {
    let err = synthea_fixture(&["p1"], &[("e1", "p1", "wellness")], &[("e9", "Flu")], &[])
        .unwrap_err();
    assert!(matches!(err, KgError::UnknownEncounter { row: 1, .. }), "{err}");
}

#[test]
fn ingest_counts_match_line_counting_oracle() {
    // A 50-patient export, one encounter per patient, items cycling over
    // small vocabularies.
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let classes = CARE_ACTION_CLASSES;
    let patients: Vec<String> = (0..50).map(|i| format!("p{i}")).collect();
    let mut encounters = Vec::new();
    let mut conditions = Vec::new();
    let mut observations = Vec::new();
    for (i, patient) in patients.iter().enumerate() {
        let encounter = format!("e{i}");
        encounters.push((encounter.clone(), patient.clone(), classes[i % 5].to_string()));
        for _ in 0..rng.random_range(1..4) {
            conditions.push((encounter.clone(), format!("Cond{}", rng.random_range(0..10))));
        }
        for _ in 0..rng.random_range(1..4) {
            observations.push((encounter.clone(), format!("Obs{}", rng.random_range(0..15))));
        }
    }
    let encounters_ref: Vec<(&str, &str, &str)> = encounters
        .iter()
        .map(|(e, p, c)| (e.as_str(), p.as_str(), c.as_str()))
        .collect();
    let conditions_ref: Vec<(&str, &str)> =
        conditions.iter().map(|(e, d)| (e.as_str(), d.as_str())).collect();
    let observations_ref: Vec<(&str, &str)> =
        observations.iter().map(|(e, d)| (e.as_str(), d.as_str())).collect();
    let patients_ref: Vec<&str> = patients.iter().map(|p| p.as_str()).collect();
    let kg = synthea_fixture(&patients_ref, &encounters_ref, &conditions_ref, &observations_ref)
        .unwrap();

    // Counting oracle over the raw rows: nodes are distinct names per file,
    // edges are distinct (encounter, item) pairs plus the two per encounter.
    let distinct_conditions: HashSet<&str> = conditions_ref.iter().map(|(_, d)| *d).collect();
    let distinct_observations: HashSet<&str> = observations_ref.iter().map(|(_, d)| *d).collect();
    let distinct_classes: HashSet<&str> = encounters_ref.iter().map(|(_, _, c)| *c).collect();
    let expected_nodes = patients_ref.len()
        + encounters_ref.len()
        + distinct_conditions.len()
        + distinct_observations.len()
        + distinct_classes.len();
    let distinct_condition_edges: HashSet<(&str, &str)> = conditions_ref.iter().copied().collect();
    let distinct_observation_edges: HashSet<(&str, &str)> =
        observations_ref.iter().copied().collect();
    let expected_edges =
        2 * encounters_ref.len() + distinct_condition_edges.len() + distinct_observation_edges.len();
    assert_eq!(kg.node_count(), expected_nodes);
    assert_eq!(kg.edge_count(), expected_edges);
}

// ---------------------------------------------------------------------------
// Negative synthesis

fn clinical_toy(encounter_classes: &[&str]) -> KnowledgeGraph {
    let mut kg = KnowledgeGraph::new(Schema::clinical());
    let schema = kg.schema().clone();
    let patient_ty = schema.node_type_id("patient").unwrap();
    let encounter_ty = schema.node_type_id("encounter").unwrap();
    let careaction_ty = schema.node_type_id("careaction").unwrap();
    let rel_pe = schema.relation_id("patient-encounter").unwrap();
    let rel_ca = schema.relation_id("encounter-careaction").unwrap();
    let patient = kg.intern_node("p0", patient_ty).unwrap();
    for class in CARE_ACTION_CLASSES {
        kg.intern_node(class, careaction_ty).unwrap();
    }
    for (i, class) in encounter_classes.iter().enumerate() {
        let encounter = kg.intern_node(&format!("e{i}"), encounter_ty).unwrap();
        let care_action = kg.node_id(class).unwrap();
        kg.add_edge(Edge {
            subject: patient,
            relation: rel_pe,
            object: encounter,
            polarity: Polarity::Positive,
        })
        .unwrap();
        kg.add_edge(Edge {
            subject: encounter,
            relation: rel_ca,
            object: care_action,
            polarity: Polarity::Positive,
        })
        .unwrap();
    }
    kg
}

#[test]
fn negatives_cover_the_other_four_care_actions() {
    let mut kg = clinical_toy(&["inpatient"]);
    let added = kg.synthesize_negative_careaction_edges().unwrap();
    assert_eq!(added, 4);
    let encounter = kg.node_id("e0").unwrap();
    let negatives: BTreeSet<&str> = kg
        .edges()
        .iter()
        .filter(|e| e.subject == encounter && !e.polarity.is_positive())
        .map(|e| kg.node_name(e.object))
        .collect();
    assert_eq!(
        negatives,
        BTreeSet::from(["wellness", "outpatient", "ambulatory", "emergency"])
    );
}

#[test]
fn no_encounters_is_vacuous() {
    let mut kg = load_triple_table(TOY_TABLE.as_bytes()).unwrap();
    assert_eq!(kg.synthesize_negative_careaction_edges().unwrap(), 0);
}

#[test]
fn negative_synthesis_is_idempotent() {
    let mut kg = clinical_toy(&["wellness", "emergency", "wellness"]);
    assert_eq!(kg.synthesize_negative_careaction_edges().unwrap(), 12);
    assert_eq!(kg.synthesize_negative_careaction_edges().unwrap(), 0);
}

#[test]
fn encounter_without_positive_edge_is_rejected() {
    let mut kg = clinical_toy(&["wellness"]);
    // Second encounter with no care-action edge at all.
    let encounter_ty = kg.schema().node_type_id("encounter").unwrap();
    let rel_pe = kg.schema().relation_id("patient-encounter").unwrap();
    let patient = kg.node_id("p0").unwrap();
    let orphan = kg.intern_node("e-orphan", encounter_ty).unwrap();
    kg.add_edge(Edge {
        subject: patient,
        relation: rel_pe,
        object: orphan,
        polarity: Polarity::Positive,
    })
    .unwrap();
    let err = kg.synthesize_negative_careaction_edges().unwrap_err();
    assert!(matches!(err, KgError::CareActionCardinality { count: 0, .. }), "{err}");
}

proptest! {
    /// Set-difference oracle: per encounter, negatives added = candidates
    /// minus the one positive; counts 4·E in total.
    #[test]
    fn negative_count_matches_set_difference_oracle(seed in 0u64..200) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let encounters = rng.random_range(1..20usize);
        let classes: Vec<&str> = (0..encounters)
            .map(|_| CARE_ACTION_CLASSES[rng.random_range(0..5)])
            .collect();
        let mut kg = clinical_toy(&classes);

        // Brute-force expectation before mutation.
        let mut expected = 0usize;
        for e in 0..encounters {
            let encounter = kg.node_id(&format!("e{e}")).unwrap();
            let connected: HashSet<&str> = kg
                .edges()
                .iter()
                .filter(|edge| edge.subject == encounter)
                .map(|edge| kg.node_name(edge.object))
                .collect();
            expected += CARE_ACTION_CLASSES
                .iter()
                .filter(|c| !connected.contains(**c))
                .count();
        }
        assert_eq!(expected, 4 * encounters);

        let added = kg.synthesize_negative_careaction_edges().unwrap();
        prop_assert_eq!(added, expected);

        // Afterwards every encounter holds exactly 1 positive + 4 negatives.
        for e in 0..encounters {
            let encounter = kg.node_id(&format!("e{e}")).unwrap();
            let rel_ca = kg.schema().relation_id("encounter-careaction").unwrap();
            let pos = kg.edges().iter().filter(|edge| {
                edge.subject == encounter && edge.relation == rel_ca && edge.polarity.is_positive()
            }).count();
            let neg = kg.edges().iter().filter(|edge| {
                edge.subject == encounter && edge.relation == rel_ca && !edge.polarity.is_positive()
            }).count();
            prop_assert_eq!(pos, 1);
            prop_assert_eq!(neg, 4);
        }
    }
}

// ---------------------------------------------------------------------------
// Patient splitting

fn multi_patient_kg(patients: usize) -> KnowledgeGraph {
    let classes: Vec<&str> = (0..patients).map(|i| CARE_ACTION_CLASSES[i % 5]).collect();
    let kg = clinical_toy(&classes);
    // clinical_toy hangs every encounter off p0; rewire one encounter per patient.
    let mut nodes = kg.nodes().to_vec();
    let mut edges = kg.edges().to_vec();
    let patient_ty = kg.schema().node_type_id("patient").unwrap();
    let rel_pe = kg.schema().relation_id("patient-encounter").unwrap();
    for p in 1..patients {
        nodes.push(NodeRecord {
            name: format!("p{p}"),
            node_type: patient_ty,
        });
    }
    let patient_id = |name: &str, nodes: &[NodeRecord]| {
        NodeId(nodes.iter().position(|n| n.name == *name).unwrap() as u32)
    };
    let mut seen = 0usize;
    for edge in &mut edges {
        if edge.relation == rel_pe {
            edge.subject = patient_id(&format!("p{seen}"), &nodes);
            seen += 1;
        }
    }
    KnowledgeGraph::from_raw_parts(kg.schema().clone(), nodes, edges)
}

#[test]
fn split_produces_disjoint_patient_sets_of_requested_size() {
    let kg = multi_patient_kg(60);
    let (train, test) = split_by_patients(&kg, 50, 10, 42).unwrap();
    let patient_ty = kg.schema().node_type_id("patient").unwrap();
    let train_patients: HashSet<String> = train
        .nodes_of_type(patient_ty)
        .map(|id| train.node_name(id).to_string())
        .collect();
    let test_patients: HashSet<String> = test
        .nodes_of_type(patient_ty)
        .map(|id| test.node_name(id).to_string())
        .collect();
    assert_eq!(train_patients.len(), 50);
    assert_eq!(test_patients.len(), 10);
    assert!(train_patients.is_disjoint(&test_patients));

    // No encounter in both outputs.
    let encounter_ty = kg.schema().node_type_id("encounter").unwrap();
    let train_encounters: HashSet<String> = train
        .nodes_of_type(encounter_ty)
        .map(|id| train.node_name(id).to_string())
        .collect();
    let test_encounters: HashSet<String> = test
        .nodes_of_type(encounter_ty)
        .map(|id| test.node_name(id).to_string())
        .collect();
    assert!(train_encounters.is_disjoint(&test_encounters));
}

#[test]
fn split_is_deterministic_per_seed() {
    let kg = multi_patient_kg(60);
    let (train_a, test_a) = split_by_patients(&kg, 50, 10, 7).unwrap();
    let (train_b, test_b) = split_by_patients(&kg, 50, 10, 7).unwrap();
    assert_eq!(train_a, train_b);
    assert_eq!(test_a, test_b);
}

#[test]
fn split_shares_vocabulary_nodes() {
    let kg = multi_patient_kg(12);
    let (train, test) = split_by_patients(&kg, 8, 4, 3).unwrap();
    let careaction_ty = kg.schema().node_type_id("careaction").unwrap();
    for out in [&train, &test] {
        let classes: BTreeSet<&str> = out
            .nodes_of_type(careaction_ty)
            .map(|id| out.node_name(id))
            .collect();
        assert_eq!(classes.len(), 5);
    }
}

#[test]
fn insufficient_patients_is_rejected() {
    let kg = multi_patient_kg(12);
    let err = split_by_patients(&kg, 10, 5, 0).unwrap_err();
    assert!(matches!(err, KgError::InsufficientPatients { .. }), "{err}");
}

#[test]
fn test_membership_frequency_is_uniform() {
    // Monte Carlo frequency oracle over a committed seed set.
    let kg = multi_patient_kg(60);
    let seeds = 300u64;
    let mut appearances: BTreeMap<String, usize> = BTreeMap::new();
    let patient_ty = kg.schema().node_type_id("patient").unwrap();
    for seed in 0..seeds {
        let (_, test) = split_by_patients(&kg, 50, 10, seed).unwrap();
        for id in test.nodes_of_type(patient_ty) {
            *appearances.entry(test.node_name(id).to_string()).or_insert(0) += 1;
        }
    }
    let expected = 10.0 / 60.0;
    for (_, count) in appearances {
        let frequency = count as f64 / seeds as f64;
        assert!(
            (frequency - expected).abs() <= 0.1,
            "frequency {frequency} vs expected {expected}"
        );
    }
}

// ---------------------------------------------------------------------------
// Validation

#[test]
fn freshly_loaded_toy_table_validates_clean() {
    let kg = load_triple_table(TOY_TABLE.as_bytes()).unwrap();
    assert!(validate_kg(&kg).is_empty());
}

#[test]
fn injected_duplicate_triple_is_reported() {
    let kg = load_triple_table(TOY_TABLE.as_bytes()).unwrap();
    let mut edges = kg.edges().to_vec();
    edges.push(edges[0]);
    let broken = KnowledgeGraph::from_raw_parts(kg.schema().clone(), kg.nodes().to_vec(), edges);
    let report = validate_kg(&broken);
    let duplicates: Vec<_> = report
        .findings
        .iter()
        .filter(|f| matches!(f, ValidationFinding::DuplicateTriple { .. }))
        .collect();
    assert_eq!(duplicates.len(), 1);
}

/// Independent re-implementation of the validator for the corruption fuzz
/// test: brute-force scans, no shared helpers.
fn oracle_findings(kg: &KnowledgeGraph) -> BTreeMap<&'static str, usize> {
    let mut counts: BTreeMap<&'static str, usize> = BTreeMap::new();
    let n = kg.node_count();
    let edges = kg.edges();

    for node in kg.nodes() {
        if node.node_type.index() >= kg.schema().node_type_count() {
            *counts.entry("dangling-node-type").or_insert(0) += 1;
        }
    }
    for i in 0..kg.nodes().len() {
        for j in (i + 1)..kg.nodes().len() {
            if kg.nodes()[i].name == kg.nodes()[j].name {
                *counts.entry("duplicate-name").or_insert(0) += 1;
            }
        }
    }
    let mut counted_pairs: HashSet<(u32, u32, u32)> = HashSet::new();
    for (i, e) in edges.iter().enumerate() {
        let mut dangling = false;
        if e.subject.index() >= n {
            *counts.entry("dangling-node").or_insert(0) += 1;
            dangling = true;
        }
        if e.object.index() >= n {
            *counts.entry("dangling-node").or_insert(0) += 1;
            dangling = true;
        }
        if e.relation.index() >= kg.schema().relation_count() {
            *counts.entry("dangling-relation").or_insert(0) += 1;
            dangling = true;
        }
        if dangling {
            continue;
        }
        let def = kg.schema().relation(e.relation);
        if kg.node_type(e.subject) != def.subject_type || kg.node_type(e.object) != def.object_type
        {
            *counts.entry("type-mismatch").or_insert(0) += 1;
        }
        // Quadratic duplicate scan.
        let key = (e.subject.0, e.relation.0, e.object.0);
        if counted_pairs.contains(&key) {
            continue;
        }
        let occurrences = edges
            .iter()
            .enumerate()
            .filter(|(j, other)| {
                *j != i
                    && other.subject == e.subject
                    && other.relation == e.relation
                    && other.object == e.object
            })
            .count();
        if occurrences > 0 {
            *counts.entry("duplicate-triple").or_insert(0) += 1;
            counted_pairs.insert(key);
        }
    }
    if let Some(vocab) = ClinicalVocab::try_resolve(kg) {
        for encounter in kg.nodes_of_type(vocab.encounter_type) {
            let positives = edges
                .iter()
                .filter(|e| {
                    e.subject == encounter
                        && e.relation == vocab.careaction_relation
                        && e.polarity.is_positive()
                        && e.object.index() < n
                })
                .count();
            if positives != 1 {
                *counts.entry("careaction-cardinality").or_insert(0) += 1;
            }
        }
    }
    counts
}

fn finding_key(finding: &ValidationFinding) -> &'static str {
    match finding {
        ValidationFinding::DanglingNode { .. } => "dangling-node",
        ValidationFinding::DanglingRelation { .. } => "dangling-relation",
        ValidationFinding::DanglingNodeType { .. } => "dangling-node-type",
        ValidationFinding::TypeMismatch { .. } => "type-mismatch",
        ValidationFinding::DuplicateTriple { .. } => "duplicate-triple",
        ValidationFinding::DuplicateNodeName { .. } => "duplicate-name",
        ValidationFinding::CareActionCardinality { .. } => "careaction-cardinality",
    }
}

#[test]
fn corrupted_graphs_match_independent_checker() {
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = clinical_toy(&["wellness", "emergency", "inpatient"]);
        let mut nodes = base.nodes().to_vec();
        let mut edges = base.edges().to_vec();

        for _ in 0..rng.random_range(1..4usize) {
            match rng.random_range(0..4u32) {
                0 => {
                    // Duplicate a random edge.
                    let e = edges[rng.random_range(0..edges.len())];
                    edges.push(e);
                }
                1 => {
                    // Dangle an object id.
                    let i = rng.random_range(0..edges.len());
                    edges[i].object = NodeId(nodes.len() as u32 + 5);
                }
                2 => {
                    // Relation swap producing a type mismatch.
                    let i = rng.random_range(0..edges.len());
                    edges[i].relation = RelationId((edges[i].relation.0 + 1) % 4);
                }
                _ => {
                    // Flip a care-action polarity, breaking cardinality.
                    if let Some(edge) = edges.iter_mut().find(|e| {
                        e.relation == base.schema().relation_id("encounter-careaction").unwrap()
                            && e.polarity.is_positive()
                    }) {
                        edge.polarity = Polarity::Negative;
                    }
                }
            }
        }
        // Occasionally clone a node name.
        if rng.random::<f64>() < 0.3 {
            let record = nodes[rng.random_range(0..nodes.len())].clone();
            nodes.push(record);
        }

        let corrupted = KnowledgeGraph::from_raw_parts(base.schema().clone(), nodes, edges);
        let report = validate_kg(&corrupted);
        let mut got: BTreeMap<&'static str, usize> = BTreeMap::new();
        for finding in &report.findings {
            *got.entry(finding_key(finding)).or_insert(0) += 1;
        }
        assert_eq!(got, oracle_findings(&corrupted), "seed {seed}");
    }
}

#[test]
fn edge_ids_always_within_node_count() {
    let kg = multi_patient_kg(20);
    for edge in kg.edges() {
        assert!(edge.subject.index() < kg.node_count());
        assert!(edge.object.index() < kg.node_count());
    }
}
