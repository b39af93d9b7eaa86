fn main() {
    let case = freqsec_core::case::CaseData::island11();
    let (mut model, vars) = freqsec_core::uc::build_base_uc(&case).unwrap();
    let pairs = freqsec_core::uc::contingency_set(&case);
    let plan = case.segmentation();
    let dynamics = freqsec_core::uc::add_frequency_dynamics(
        &mut model, &case, &vars, &pairs, &plan,
        freqsec_core::uc::SaturationMode::Relaxed,
    ).unwrap();
    freqsec_core::uc::add_nadir_constraint(&mut model, &dynamics, case.delta_f_th).unwrap();
    let (mps, _) = model.to_mps().unwrap();
    std::fs::write("/tmp/nadir.mps", &mps).unwrap();
    let stats = model.stats().unwrap();
    eprintln!("rows {} cols {} nz {}", stats.rows, stats.cols, stats.nonzeros);
}
