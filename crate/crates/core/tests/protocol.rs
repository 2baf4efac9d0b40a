use approx::assert_relative_eq;
use dyndisc::bounds::*;
use dyndisc::channels::{classical_fidelity, unique_set, ChannelModel, FidelitySource};
use dyndisc::gaussian::ProbeEnergy;
use dyndisc::patterns::{klnn_distribution, ImageSpace};
use dyndisc::protocol::*;
use proptest::prelude::*;

fn scenario(task: Task, m: usize, k: Neighbourhood, resource: Resource) -> Scenario {
    Scenario {
        task,
        m,
        k,
        model: ChannelModel::pure_loss(1.0, 0.9).unwrap(),
        energy_n_s: 2.0,
        resource,
        source: FidelitySource::ClosedForm,
    }
}

fn energy(n: f64) -> ProbeEnergy {
    ProbeEnergy::new(n).unwrap()
}

#[test]
fn resource_resolution() {
    assert_eq!(Resource::Copies(2.0).resolve(3, energy(1.0)).unwrap(), (2.0, 6.0));
    assert_eq!(Resource::AverageUse(6.0).resolve(3, energy(1.0)).unwrap(), (2.0, 6.0));
    let (m, m_bar) = Resource::PhotonsPerChannel(500.0).resolve(63, energy(2.0)).unwrap();
    assert_eq!(m_bar, 250.0);
    assert_relative_eq!(m, 250.0 / 63.0, max_relative = 1e-15);
    assert!(Resource::PhotonsPerChannel(500.0).resolve(1, energy(0.0)).is_err());
    assert!(Resource::Copies(-1.0).resolve(1, energy(1.0)).is_err());
    assert_eq!(Neighbourhood::Max.resolve(7), 6);
    assert_eq!(Neighbourhood::Width(2).resolve(7), 2);
}

#[test]
fn invalid_neighbourhood_is_reported() {
    let err = scenario(Task::Cpf, 3, Neighbourhood::Width(1), Resource::Copies(1.0)).evaluate().unwrap_err();
    assert!(err.to_string().contains("k*m even"), "{err}");
    assert!(scenario(Task::Cpf, 1, Neighbourhood::Max, Resource::Copies(1.0)).evaluate().is_err());
}

#[test]
fn cpf_pipeline() {
    let sc = scenario(Task::Cpf, 64, Neighbourhood::Max, Resource::PhotonsPerChannel(500.0));
    let r = sc.evaluate().unwrap();
    let fids = unique_set(&sc.model, energy(2.0), FidelitySource::ClosedForm).unwrap();
    let f_cl = classical_fidelity(&sc.model, energy(2.0));
    let copies = 250.0 / 63.0;
    let q = klnn_cpf_bound(64, 63, copies, &fids).unwrap();
    assert_eq!(r.k, 63);
    assert_relative_eq!(r.bounds.upper, q.upper, max_relative = 1e-14);
    assert_relative_eq!(r.bounds.m_bar, 250.0, max_relative = 1e-15);
    let cl = classical_cpf_lower(64, 250.0, f_cl);
    assert_relative_eq!(r.bounds.classical_lower.unwrap(), cl, max_relative = 1e-14);
    let delta = r.bounds.delta_adv.unwrap();
    assert_relative_eq!(delta, (cl / q.upper).log10(), max_relative = 1e-12);
    assert!(delta > 0.0, "delta {delta}");
}

#[test]
fn kmax_tasks_use_bounded_cpf_formulas() {
    let f = scenario(Task::Ucpf(2), 6, Neighbourhood::Max, Resource::Copies(1.5));
    let r = f.evaluate().unwrap();
    let fids = r.fidelities;
    let want = bcpf_bounds(6, &[2], 1.5, &fids).unwrap();
    assert_relative_eq!(r.bounds.upper_raw, want.upper_raw, max_relative = 1e-14);
    let engine = evaluate_bounds(
        &build_error_polynomial(&ImageSpace::ucpf(6, 2).unwrap(), &klnn_distribution(6, 5).unwrap()).unwrap(),
        &fids,
        1.5,
    );
    assert_relative_eq!(r.bounds.upper_raw, engine.upper_raw, max_relative = 1e-12);
    assert_relative_eq!(r.bounds.m_bar, 7.5, max_relative = 1e-15);

    let b = scenario(Task::Bcpf(vec![1, 3]), 5, Neighbourhood::Max, Resource::Copies(1.0)).evaluate().unwrap();
    let want = bcpf_bounds(5, &[1, 3], 1.0, &b.fidelities).unwrap();
    assert_relative_eq!(b.bounds.lower, want.lower, max_relative = 1e-14);
}

#[test]
fn narrow_neighbourhoods_use_the_engine() {
    let r = scenario(Task::Ucpf(2), 6, Neighbourhood::Width(2), Resource::AverageUse(4.0)).evaluate().unwrap();
    let engine = evaluate_bounds(
        &build_error_polynomial(&ImageSpace::ucpf(6, 2).unwrap(), &klnn_distribution(6, 2).unwrap()).unwrap(),
        &r.fidelities,
        2.0,
    );
    assert_relative_eq!(r.bounds.upper_raw, engine.upper_raw, max_relative = 1e-14);
    assert_eq!((r.bounds.m_copies, r.bounds.m_bar), (2.0, 4.0));
}

#[test]
fn uniform_fixed_pairs_match_engine() {
    let r = scenario(Task::Uniform, 6, Neighbourhood::Width(1), Resource::Copies(2.0)).evaluate().unwrap();
    let engine = evaluate_bounds(
        &build_error_polynomial(&ImageSpace::uniform_all(6).unwrap(), &klnn_distribution(6, 1).unwrap()).unwrap(),
        &r.fidelities,
        2.0,
    );
    assert_relative_eq!(r.bounds.upper_raw, engine.upper_raw, max_relative = 1e-12);
    assert_relative_eq!(r.bounds.lower, engine.lower, max_relative = 1e-12);
}

#[test]
fn singleton_space_has_no_advantage_ratio() {
    let r = scenario(Task::Ucpf(0), 5, Neighbourhood::Width(2), Resource::Copies(1.0)).evaluate().unwrap();
    assert_eq!(r.bounds.upper, 0.0);
    assert_eq!(r.bounds.delta_adv, None);
    assert_eq!(r.bounds.classical_lower, Some(0.0));
}

#[test]
fn report_serialises_flat() {
    let r = scenario(Task::Cpf, 4, Neighbourhood::Max, Resource::Copies(1.0)).evaluate().unwrap();
    let v: serde_json::Value = serde_json::to_value(&r).unwrap();
    for key in
        ["k", "fidelities", "classical_fidelity", "lower", "upper", "upper_raw", "delta_adv", "m_copies", "m_bar"]
    {
        assert!(v.get(key).is_some(), "missing {key}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn equal_channels_never_show_advantage(
        m in 2usize..=40, eta in 0.05..=1.0f64, n in 0.01..50.0f64, budget in 0.1..1e3f64, task in 0usize..3,
    ) {
        let task = match task {
            0 => Task::Cpf,
            1 => Task::Ucpf(m / 2),
            _ => Task::Bcpf(vec![1, m - 1]),
        };
        let sc = Scenario {
            task,
            m,
            k: Neighbourhood::Max,
            model: ChannelModel::pure_loss(eta, eta).unwrap(),
            energy_n_s: n,
            resource: Resource::PhotonsPerChannel(budget),
            source: FidelitySource::ClosedForm,
        };
        let r = sc.evaluate().unwrap();
        if let Some(d) = r.bounds.delta_adv {
            prop_assert!(d <= 1e-12, "delta {}", d);
        }
    }

    #[test]
    fn fair_copies_match_average_use(m in 3usize..=12, pick in 0usize..12, m_bar in 0.1..100.0f64) {
        let ks: Vec<usize> = (1..m).filter(|&k| dyndisc::patterns::is_valid_k(m, k)).collect();
        let k = ks[pick % ks.len()];
        let (copies, back) = Resource::AverageUse(m_bar).resolve(k, energy(1.0)).unwrap();
        let s = klnn_distribution(m, k).unwrap();
        prop_assert!((dyndisc::patterns::average_channel_use(&s, copies) - back).abs() <= 1e-12 * m_bar);
    }
}
