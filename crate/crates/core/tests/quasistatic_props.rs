use pmlab::quasistatic::{quasistatic_run, LoadProgram, QuasistaticModel};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn hat_load_traces_keep_their_invariants(k in 0usize..4, t0 in 1.2f64..2.0) {
        let eps = [1e-2, 1e-3, 1e-4, 1e-5][k];
        let model = QuasistaticModel::new(eps).unwrap();
        let load = LoadProgram::hat(t0);
        let tau = 1e-2;
        let trace = quasistatic_run(&model, tau, &load, 2.0 * t0).unwrap();
        let rows = &trace.rows;
        for w in rows.windows(2) {
            prop_assert!(w[1].memory >= w[0].memory);
            let loading = w[1].load > w[0].load;
            if loading {
                prop_assert!(w[1].energy >= w[0].energy - 1e-15);
            } else if w[0].memory > 0.0 && w[0].load.abs() <= w[0].memory {
                // unloading inside the memory: energy frozen
                prop_assert_eq!(w[1].energy, w[0].energy);
            }
        }
        prop_assert!(trace.final_state.memory_entries().len() <= 1);

        let free = quasistatic_run(&model.without_dissipation(), tau, &load, 2.0 * t0).unwrap();
        for (a, b) in rows.iter().zip(&free.rows) {
            let unloading = a.k > 0 && a.load < rows[a.k - 1].load;
            if !unloading {
                prop_assert_eq!(a.energy, b.energy, "k = {}", a.k);
            }
        }
        let differs = rows.iter().zip(&free.rows).any(|(a, b)| a.energy != b.energy);
        prop_assert_eq!(differs, rows.iter().any(|r| r.memory > 0.0));
    }
}
