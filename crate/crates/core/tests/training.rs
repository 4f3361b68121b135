use rulevae::features::{generate_synthetic, SyntheticSpec};
use rulevae::model::{
    decode_checkpoint, embed, encode_checkpoint, evaluate_loss, history_csv, initial_model, train,
    ModelConfig, TrainConfig,
};
use rulevae::{Dataset, Error, RuleSet};
use serde_json::json;

fn dataset(seed: u64) -> Dataset {
    let spec: SyntheticSpec = serde_json::from_value(json!({
        "group_count": 4,
        "samples_per_group": 6,
        "visual_dim": 6,
        "semantic_dim": 4,
        "schema": [{"name": "is_uav", "kind": "boolean"},
                   {"name": "is_combat", "kind": "boolean"},
                   {"name": "is_transport", "kind": "boolean"},
                   {"name": "span", "kind": "numeric"}],
        "templates": [
            {"is_uav": true, "is_combat": true, "is_transport": false, "span": 10.0},
            {"is_uav": true, "is_combat": false, "is_transport": true, "span": 14.0},
            {"is_uav": false, "is_combat": true, "is_transport": false, "span": 11.0},
            {"is_uav": false, "is_combat": false, "is_transport": true, "span": 40.0}
        ],
        "noise_scale": 0.5,
        "attribute_flip_probability": 0.1,
        "seed": seed
    }))
    .unwrap();
    generate_synthetic(&spec).unwrap()
}

fn rules(ds: &Dataset) -> RuleSet {
    let text = json!({
        "schema": ds.schema().to_json(),
        "rules": [
            {"id": "uav_combat", "kind": "sample_implication",
             "antecedent": [{"attribute": "is_uav", "equals": true}],
             "consequent": {"attribute": "is_combat", "equals": true}},
            {"id": "uav", "kind": "cluster_homogeneity", "attributes": ["is_uav"]},
            {"id": "mission", "kind": "cluster_exclusion",
             "literals": [{"attribute": "is_combat", "equals": true},
                          {"attribute": "is_transport", "equals": true}]}
        ]
    });
    RuleSet::parse(&text.to_string()).unwrap()
}

fn model_config(ds: &Dataset, rs: &RuleSet) -> ModelConfig {
    ModelConfig {
        semantic_dim: 6,
        semantic_hidden: 8,
        rule_dim: 4,
        rule_hidden: 8,
        hidden1: 16,
        hidden2: 12,
        latent_dim: 3,
        predictor_hidden: 6,
        ..ModelConfig::new(
            ds.visual_dim(),
            ds.semantic_dim(),
            ds.schema().encoded_width(),
            rs.len(),
        )
    }
}

fn train_config(epochs: usize, alpha: f64) -> TrainConfig {
    TrainConfig {
        epochs,
        batch_size: 8,
        learning_rate: 5e-3,
        rule_weight: alpha,
        provisional_period: 2,
        seed: 3,
        ..TrainConfig::default()
    }
}

#[test]
fn history_has_one_finite_row_per_epoch() {
    let ds = dataset(1);
    let rs = rules(&ds);
    let cfg = train_config(5, 0.15);
    let out = train(&ds, &rs, &model_config(&ds, &rs), &cfg).unwrap();
    assert_eq!(out.history.len(), 5);
    for (e, h) in out.history.iter().enumerate() {
        assert!(h.is_finite());
        assert!(h.recon >= 0.0 && h.kl >= 0.0 && h.consistency >= 0.0 && h.violation >= 0.0);
        let rebuilt = h.recon + cfg.beta * h.kl + h.alpha * (h.consistency + h.violation);
        assert!((h.total - rebuilt).abs() <= 1e-10, "epoch {}", e + 1);
    }
    assert_eq!(out.history[0].alpha, 0.0);
    assert_eq!(out.history[4].alpha, 0.15);
}

#[test]
fn zero_rule_weight_excludes_rule_losses() {
    let ds = dataset(2);
    let rs = rules(&ds);
    let out = train(&ds, &rs, &model_config(&ds, &rs), &train_config(2, 0.0)).unwrap();
    for h in &out.history {
        assert!(h.consistency > 0.0 && h.violation > 0.0);
        assert_eq!(h.total, h.recon + h.kl);
    }
}

#[test]
fn one_epoch_lowers_reconstruction() {
    let ds = dataset(3);
    let rs = rules(&ds);
    let mc = model_config(&ds, &rs);
    let cfg = TrainConfig {
        beta: 0.0,
        ..train_config(1, 0.0)
    };
    let initial = initial_model(&ds, &rs, &mc, &cfg).unwrap();
    let before = evaluate_loss(&initial, &ds, &rs, 0.0, 0.0).unwrap();
    let trained = train(&ds, &rs, &mc, &cfg).unwrap().model;
    let after = evaluate_loss(&trained, &ds, &rs, 0.0, 0.0).unwrap();
    assert!(
        after.recon < before.recon,
        "{} -> {}",
        before.recon,
        after.recon
    );
}

#[test]
fn same_seed_same_history_and_weights() {
    let ds = dataset(4);
    let rs = rules(&ds);
    let mc = model_config(&ds, &rs);
    let a = train(&ds, &rs, &mc, &train_config(3, 0.15)).unwrap();
    let b = train(&ds, &rs, &mc, &train_config(3, 0.15)).unwrap();
    assert_eq!(history_csv(&a.history), history_csv(&b.history));
    assert_eq!(a.model, b.model);
    let c = train(
        &ds,
        &rs,
        &mc,
        &TrainConfig {
            seed: 4,
            ..train_config(3, 0.15)
        },
    )
    .unwrap();
    assert_ne!(a.model.params, c.model.params);
}

#[test]
fn embed_matches_encoder_mean() {
    let ds = dataset(5);
    let rs = rules(&ds);
    let mc = model_config(&ds, &rs);
    let model = train(&ds, &rs, &mc, &train_config(1, 0.15)).unwrap().model;
    let z = embed(&model, &ds).unwrap();
    assert_eq!(z.shape(), (ds.len(), mc.latent_dim));

    let input = model.preprocessor.prepare(&ds).unwrap();
    let p = &model.params;
    let ft = rulevae::model::semantic_encode(p, &input.semantic).unwrap();
    let fr = rulevae::model::rule_encode(p, &input.attributes).unwrap();
    let joint = rulevae::model::build_joint(&input.visual, &ft, &fr).unwrap();
    let (mu, _) = rulevae::model::encode(p, &joint).unwrap();
    assert_eq!(z, mu);
}

#[test]
fn identical_records_embed_identically() {
    let ds = dataset(6);
    let rs = rules(&ds);
    let model = train(&ds, &rs, &model_config(&ds, &rs), &train_config(1, 0.15))
        .unwrap()
        .model;
    let mut records = ds.records().to_vec();
    let mut twin = records[0].clone();
    twin.id = "twin".into();
    records.push(twin);
    let ds2 = Dataset::new(
        ds.schema().clone(),
        records,
        ds.visual_dim(),
        ds.semantic_dim(),
    )
    .unwrap();
    let z = embed(&model, &ds2).unwrap();
    assert_eq!(z.row(0), z.row(ds2.len() - 1));
}

#[test]
fn checkpoint_roundtrip_is_exact() {
    let ds = dataset(7);
    let rs = rules(&ds);
    let model = train(&ds, &rs, &model_config(&ds, &rs), &train_config(1, 0.15))
        .unwrap()
        .model;
    let bytes = encode_checkpoint(&model).unwrap();
    assert_eq!(&bytes[..4], b"DVAE");
    assert_eq!(u16::from_le_bytes([bytes[4], bytes[5]]), 1);
    let back = decode_checkpoint(&bytes).unwrap();
    assert_eq!(back, model);
    assert_eq!(embed(&back, &ds).unwrap(), embed(&model, &ds).unwrap());

    assert!(matches!(
        decode_checkpoint(&bytes[..bytes.len() - 8]),
        Err(Error::Checkpoint(_))
    ));
}

#[test]
fn mismatched_inputs_are_shape_errors() {
    let ds = dataset(8);
    let rs = rules(&ds);
    let mut mc = model_config(&ds, &rs);
    mc.visual_dim += 1;
    assert!(matches!(
        train(&ds, &rs, &mc, &train_config(1, 0.1)),
        Err(Error::Shape(_))
    ));

    let mc = model_config(&ds, &rs);
    let model = train(&ds, &rs, &mc, &train_config(1, 0.1)).unwrap().model;
    let other: SyntheticSpec = serde_json::from_value(json!({
        "group_count": 1, "samples_per_group": 3, "visual_dim": 2, "semantic_dim": 4,
        "schema": ds.schema().to_json(),
        "templates": [{"is_uav": true, "is_combat": true, "is_transport": false, "span": 1.0}],
        "noise_scale": 1.0, "attribute_flip_probability": 0.0, "seed": 1
    }))
    .unwrap();
    let small = generate_synthetic(&other).unwrap();
    assert!(matches!(embed(&model, &small), Err(Error::Shape(_))));
}

#[test]
fn divergence_reports_epoch_and_batch() {
    let ds = dataset(9);
    let rs = rules(&ds);
    let cfg = TrainConfig {
        learning_rate: 1e300,
        ..train_config(3, 0.15)
    };
    match train(&ds, &rs, &model_config(&ds, &rs), &cfg) {
        Err(Error::Training { epoch, batch, .. }) => assert!(epoch >= 1 && batch <= 3),
        other => panic!("expected a training error, got {other:?}"),
    }
}
