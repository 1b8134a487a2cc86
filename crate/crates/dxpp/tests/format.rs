use dxpp::format::{problem_from_str, problem_to_string, read_metadata, read_vector, sidecar_path, write_instance, write_vector};
use dxpp_core::benchgen::{gen_chain_projection, gen_portfolio_qp, gen_random_qp};
use dxpp_core::problem::QpProblem;

fn same_bits(a: &QpProblem, b: &QpProblem) -> bool {
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    let mats = |p: &QpProblem| [p.p().to_dense(), p.a().to_dense(), p.c().to_dense()];
    bits(a.q()) == bits(b.q())
        && bits(a.b()) == bits(b.b())
        && bits(a.d()) == bits(b.d())
        && mats(a).iter().zip(mats(b).iter()).all(|(x, y)| bits(x.as_slice()) == bits(y.as_slice()))
        && a.storage_mode() == b.storage_mode()
}

#[test]
fn problems_round_trip_bit_exactly() {
    let instances = [gen_random_qp(12, 6, 5), gen_chain_projection(20, 3, 1), gen_portfolio_qp(3, 4, 10.0, 2.0, 2)];
    for inst in &instances {
        let text = problem_to_string(&inst.problem);
        let back = problem_from_str(&text).unwrap();
        assert!(same_bits(&inst.problem, &back));
        assert_eq!(problem_to_string(&back), text);
    }
}

#[test]
fn upper_triangular_p_is_expanded() {
    let text = r#"{"n":2,"p":0,"m":0,"storage_mode":"sparse","P_upper":true,
        "P":{"row_offsets":[0,2,3],"col_indices":[0,1,1],"values":[2.0,0.5,3.0]},
        "q":[0,0],"A":{"row_offsets":[0],"col_indices":[],"values":[]},"b":[],
        "C":{"row_offsets":[0],"col_indices":[],"values":[]},"d":[]}"#;
    let p = problem_from_str(text).unwrap().p().to_dense();
    assert_eq!(p.as_slice(), &[2.0, 0.5, 0.5, 3.0]);
}

#[test]
fn invalid_files_are_rejected() {
    assert!(problem_from_str("not json").is_err());
    assert!(problem_from_str(r#"{"n":3,"p":0,"m":0,"storage_mode":"dense","P":[[1,0],[0,1]],"q":[0,0],"A":[],"b":[],"C":[],"d":[]}"#).is_err());
}

#[test]
fn instance_sidecar_carries_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nested").join("chain.json");
    let inst = gen_chain_projection(5, 2, 9);
    let meta_path = write_instance(&path, &inst).unwrap();
    assert_eq!(meta_path, sidecar_path(&path));
    let meta = read_metadata(&meta_path).unwrap();
    assert_eq!(meta.family, "chain");
    assert_eq!(meta.seed, 9);
    assert_eq!(meta.ground_truth.as_deref(), inst.ground_truth.as_deref());
    let v = dir.path().join("v.json");
    write_vector(&v, &[0.1, -1e-300, 3.0]).unwrap();
    assert_eq!(read_vector(&v).unwrap(), vec![0.1, -1e-300, 3.0]);
}
