use gigalink_core::bitframe::FrameCodec;
use gigalink_core::harness::output::render_rows;
use gigalink_core::harness::{run_flow_sim, run_link_model, run_sync_experiment, search_scrambler_mask, OutputFormat, Scenario};
use gigalink_core::{build_frame, FrameLayout, PreamblePattern, ScramblerSequence};

fn header(bytes: &[u8]) -> String {
    String::from_utf8(bytes.to_vec()).unwrap().lines().next().unwrap().to_owned()
}

fn tiny() -> Scenario {
    let mut sc = Scenario::default();
    sc.sync.preamble_bits = vec![64];
    sc.sync.banks = vec![2];
    sc.sync.gammas = vec![59];
    sc.sync.ps = vec![1e-3];
    sc.sync.chain_ebn0_db = vec![];
    sc.link.distances_m = vec![1.0];
    sc.flow.duration_write_ticks = 200_000;
    sc
}

#[test]
fn frozen_column_names() {
    let sc = tiny();
    let csv = OutputFormat::Csv;
    assert_eq!(
        header(&render_rows(&run_sync_experiment(&sc).unwrap(), csv).unwrap()),
        "fingerprint,source,n,banks,gamma,ebn0_db,p,p_miss_analytic,p_miss_mc,miss_trials,misses,\
         miss_consistent_3sigma,p_fa_per_pair,p_fa_frame_union,p_fa_mc"
    );
    assert_eq!(
        header(&render_rows(&run_link_model(&sc).unwrap().rows, csv).unwrap()),
        "fingerprint,distance_m,fspl_db,rx_power_dbm,snr_db,ebn0_db,ber_uncoded,ber_coded,rx_power_human_dbm,\
         rx_power_door_dbm,rx_power_events_dbm,ber_uncoded_events,ber_coded_events"
    );
    let (_, trace) = run_flow_sim(&sc).unwrap();
    assert_eq!(header(&render_rows(&trace.events, csv).unwrap()), "tick,event,occupancy");
    let mask = search_scrambler_mask(&PreamblePattern::default_64(), 2, 0).unwrap();
    assert_eq!(
        header(&render_rows(&[mask], csv).unwrap()),
        "mask,max_score,zero_mask_score,candidates_evaluated,corpus_frames,windows_per_candidate,seed"
    );
}

#[test]
fn zero_payload_frame_is_preamble_then_mask() {
    // RS of all-zero data is all zeros, so only the scrambler shows.
    for (layout, preamble) in [
        (FrameLayout::PREAMBLE_64, "bf9add92a3a71802"),
        (FrameLayout::LEGACY_32, "9f25d40d"),
    ] {
        let frame = build_frame(&vec![0; layout.payload_bytes()], &FrameCodec::default(), &layout).unwrap();
        let mut want = hex::decode(preamble).unwrap();
        let mask = ScramblerSequence::DEFAULT;
        want.extend(mask.bytes().iter().cycle().take(layout.coded_region_bytes()));
        assert_eq!(frame.bytes(), &want[..]);
    }
    assert_eq!(ScramblerSequence::DEFAULT.to_hex(), "52af0c64df46769d");
}
