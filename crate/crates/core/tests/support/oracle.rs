//! Straight-line transcription of the homogeneous (single server cohort)
//! model, written against the published parameter table only. It shares no
//! code with the library and must stay that way.

#![allow(dead_code)]

pub struct Method1Oracle {
    pub s_c5_tib: f64,
    pub s_std_tib: f64,
    pub s_mm_tib: f64,
    pub n_plot_c5: f64,
    pub n_plot_mm: f64,
    pub n_plot_std: f64,
    pub n_node_c5: f64,
    pub n_node_uncompressed: f64,
    pub e_plot_c5_ram_kwh: f64,
    pub e_plot_c5_gpu_kwh: f64,
    pub e_plot_mm_kwh: f64,
    pub e_plot_std_kwh: f64,
    pub e_farm_kwh: f64,
    pub e_op_kwh: f64,
    pub c_elec_t: f64,
    pub c_emb_ssd_t: f64,
    pub c_emb_gpu_t: f64,
    pub c_emb_nogpu_t: f64,
    pub c_emb_hdd_t: f64,
    pub c_emb_t: f64,
    pub c_total_t: f64,
}

pub fn method1() -> Method1Oracle {
    // parameter table
    let s_net_eib = 33.8465;
    let s_netg_eib = 12.6593;
    let n_node = 250_000.0;
    let s_plot_gib = 101.4;
    let s_plot_c5_gib = 81.3;
    let e_plot_kwh = 4.995;
    let e_plot_c5_ram_wh = 165.637;
    let e_plot_c5_gpu_wh = 85.968;
    let e_plot_mm_wh = 927.634;
    let e_farm_kwh = 6761.283;
    let pue = 1.58;
    let i_elec = 0.384;
    let t_writes = 1.64;
    let t_writes_mm = 1.357;
    let t_writes_bb = 0.084;
    let gamma_ssd = 160.0;
    let gamma_hdd = 20.0;
    let gamma_gpu = 200.0;
    let gamma_enter = 1000.0;
    let tbw_ssd = 2390.15207;
    let l_lifetime = 4.0;
    let f_bb = 0.6;
    let f_mm = 0.3;
    let f_std = 0.1;
    let f_allocation = 0.67;

    let tib_per_eib = 1024.0 * 1024.0;
    let gib_per_tib = 1024.0;
    let s_netg_tib = s_netg_eib * tib_per_eib;
    let s_net_tib = s_net_eib * tib_per_eib;

    let s_c5 = f_bb * s_netg_tib;
    let s_std = f_std * s_netg_tib;
    let s_mm = f_mm * s_netg_tib;

    let n_plot_c5 = s_c5 * gib_per_tib / s_plot_c5_gib;
    let n_plot_mm = s_mm * gib_per_tib / s_plot_gib;
    let n_plot_std = s_std * gib_per_tib / s_plot_gib;

    let n_node_c5 = n_node * f_bb;
    let n_node_uncompressed = n_node - n_node_c5;

    // plotting
    let e1 = n_plot_c5 * (e_plot_c5_ram_wh / 1000.0) * 0.5 * pue;
    let e2 = n_plot_c5 * (e_plot_c5_gpu_wh / 1000.0) * 0.5 * pue;
    let e3 = n_plot_mm * (e_plot_mm_wh / 1000.0) * pue;
    let e4 = n_plot_std * e_plot_kwh * pue;
    // farming
    let e5 = n_node * e_farm_kwh * pue;
    let e_op = e1 + e2 + e3 + e4 + e5;
    // kg from here on
    let c_elec = i_elec * e_op;
    let c_ssd = (t_writes * n_plot_std + t_writes_mm * n_plot_mm + t_writes_bb * n_plot_c5)
        * gamma_ssd
        / tbw_ssd;
    let c_gpu = n_node_c5 * (gamma_enter + gamma_gpu) * f_allocation / l_lifetime;
    let c_nogpu = n_node_uncompressed * gamma_enter * f_allocation / l_lifetime;
    let c_hdd = s_net_tib * gamma_hdd / l_lifetime;
    let c_emb = c_ssd + c_gpu + c_nogpu + c_hdd;
    let c_total = c_elec + c_emb;

    Method1Oracle {
        s_c5_tib: s_c5,
        s_std_tib: s_std,
        s_mm_tib: s_mm,
        n_plot_c5,
        n_plot_mm,
        n_plot_std,
        n_node_c5,
        n_node_uncompressed,
        e_plot_c5_ram_kwh: e1,
        e_plot_c5_gpu_kwh: e2,
        e_plot_mm_kwh: e3,
        e_plot_std_kwh: e4,
        e_farm_kwh: e5,
        e_op_kwh: e_op,
        c_elec_t: c_elec / 1000.0,
        c_emb_ssd_t: c_ssd / 1000.0,
        c_emb_gpu_t: c_gpu / 1000.0,
        c_emb_nogpu_t: c_nogpu / 1000.0,
        c_emb_hdd_t: c_hdd / 1000.0,
        c_emb_t: c_emb / 1000.0,
        c_total_t: c_total / 1000.0,
    }
}

/// Published intermediate values of the homogeneous model.
pub mod printed {
    pub const S_C5_TIB: f64 = 7_964_542.894;
    pub const S_STD_TIB: f64 = 1_327_423.815;
    pub const S_MM_TIB: f64 = 3_982_271.447;
    pub const N_PLOT_C5: f64 = 100_316_014.136;
    pub const N_PLOT_MM: f64 = 40_215_443.207;
    pub const N_PLOT_STD: f64 = 13_405_147.736;
    pub const E_PLOT_C5_RAM_KWH: f64 = 13_126_674.470;
    pub const E_PLOT_C5_GPU_KWH: f64 = 6_812_934.012;
    pub const E_PLOT_MM_KWH: f64 = 58_942_235.661;
    pub const E_PLOT_STD_KWH: f64 = 105_794_766.444;
    pub const E_FARM_KWH: f64 = 2_670_706_785.0;
    pub const E_OP_KWH: f64 = 2_855_383_395.587;
    pub const C_ELEC_T: f64 = 1_096_467.224;
    pub const C_EMB_SSD_T: f64 = 5_688.900;
    pub const C_EMB_GPU_T: f64 = 30_150.0;
    pub const C_EMB_NOGPU_T: f64 = 16_750.0;
    pub const C_EMB_HDD_T: f64 = 177_453.138;
    pub const C_EMB_T: f64 = 230_042.037;
    pub const C_TOTAL_MT: f64 = 1.32;
}

pub fn rel_err(actual: f64, expected: f64) -> f64 {
    if expected == 0.0 {
        actual.abs()
    } else {
        ((actual - expected) / expected).abs()
    }
}
