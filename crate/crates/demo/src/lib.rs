//! Browser demo of the connectivity pipeline.
//!
//! A [`Session`] simulates one recording whose channels are coupled with a
//! chosen strength, fits a VAR model to it, and then answers three queries:
//! a band-averaged PDC heatmap, the PDC spectrum of one directed pair, and
//! the network measures of one band.

use connectome::eeg_io::standardize;
use connectome::netmetrics::{clustering, degrees, global_efficiency, symmetrize, transitivity};
use connectome::simulate::{simulate_var, SyntheticCohort};
use connectome::spectral::{band_pdc, pdc_at, BandSpec, PdcTensor, DEFAULT_GRID_STEP};
use connectome::var_model::{fit_var, VarModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wasm_bindgen::prelude::*;

const RATE: f64 = 128.0;
const ORDER: usize = 5;

fn js_err(e: connectome::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub struct Session {
    model: VarModel,
    pdc: PdcTensor,
}

impl Session {
    /// Simulates `seconds` of data at 128 Hz and fits a VAR(5) model.
    pub fn build(channels: usize, coupling: f64, seconds: f64, seed: u64) -> connectome::Result<Session> {
        if !(2..=32).contains(&channels) {
            return Err(connectome::Error::Validation(format!("channels must be in 2..=32, got {channels}")));
        }
        let cohort = SyntheticCohort { channels, coupling_positive: coupling, ..SyntheticCohort::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let truth = cohort.subject_model(0, &mut rng);
        let samples = (seconds * RATE).round() as usize;
        let rec = simulate_var(&truth, samples, RATE, &mut rng);
        let model = fit_var(&standardize(&rec), ORDER)?;
        let pdc = band_pdc(&model, RATE, &BandSpec::default(), DEFAULT_GRID_STEP, true)?;
        Ok(Session { model, pdc })
    }

    /// Row-major `N x N` band PDC; entry `(i, j)` is the influence `j -> i`.
    pub fn heatmap(&self, band: usize) -> connectome::Result<Vec<f64>> {
        self.check_band(band)?;
        Ok(self.pdc.band_slice(band).transpose().as_slice().to_vec())
    }

    /// `|pi_target,source(f)|` on a grid from 0 to the Nyquist frequency.
    pub fn pair_spectrum(&self, target: usize, source: usize, step: f64) -> connectome::Result<Vec<f64>> {
        let n = self.model.channels();
        if target >= n || source >= n {
            return Err(connectome::Error::Validation(format!("channel index out of range 0..{n}")));
        }
        if !(step > 0.0) {
            return Err(connectome::Error::Validation("step must be positive".into()));
        }
        let count = (RATE / 2.0 / step).floor() as usize + 1;
        (0..count)
            .map(|k| pdc_at(&self.model, k as f64 * step, RATE).map(|m| m[(target, source)]))
            .collect()
    }

    /// Strength, global efficiency, clustering and transitivity of the
    /// symmetrized band network, as JSON.
    pub fn metrics(&self, band: usize) -> connectome::Result<String> {
        self.check_band(band)?;
        let net = symmetrize(&self.pdc.band_slice(band))?;
        let (local, mean_clustering) = clustering(&net);
        let doc = serde_json::json!({
            "band": self.pdc.bands.bands()[band].name,
            "strength": degrees(&net),
            "efficiency": global_efficiency(&net),
            "clustering": local,
            "mean_clustering": mean_clustering,
            "transitivity": transitivity(&net),
        });
        Ok(doc.to_string())
    }

    fn check_band(&self, band: usize) -> connectome::Result<()> {
        if band >= self.pdc.bands.len() {
            return Err(connectome::Error::Validation(format!("band index {band} out of range")));
        }
        Ok(())
    }
}

#[wasm_bindgen]
impl Session {
    #[wasm_bindgen(constructor)]
    pub fn new(channels: usize, coupling: f64, seconds: f64, seed: u32) -> Result<Session, JsError> {
        Session::build(channels, coupling, seconds, u64::from(seed)).map_err(js_err)
    }

    pub fn channels(&self) -> usize {
        self.model.channels()
    }

    /// Comma-separated band names.
    #[wasm_bindgen(js_name = bandNames)]
    pub fn band_names(&self) -> String {
        self.pdc.bands.names().join(",")
    }

    #[wasm_bindgen(js_name = bandHeatmap)]
    pub fn band_heatmap(&self, band: usize) -> Result<Vec<f64>, JsError> {
        self.heatmap(band).map_err(js_err)
    }

    #[wasm_bindgen(js_name = pdcSpectrum)]
    pub fn pdc_spectrum(&self, target: usize, source: usize, step: f64) -> Result<Vec<f64>, JsError> {
        self.pair_spectrum(target, source, step).map_err(js_err)
    }

    #[wasm_bindgen(js_name = networkMetrics)]
    pub fn network_metrics(&self, band: usize) -> Result<String, JsError> {
        self.metrics(band).map_err(js_err)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heatmap_shows_the_simulated_coupling() {
        let s = Session::build(6, 0.4, 30.0, 1).unwrap();
        let h = s.heatmap(2).unwrap();
        assert_eq!(h.len(), 36);
        // Even channels drive the next odd channel: row 1, column 0.
        let driven = h[6 + 0];
        let reverse = h[1];
        assert!(driven > 3.0 * reverse, "0->1 {driven} vs 1->0 {reverse}");
        assert!((0..6).all(|i| h[i * 7] == 0.0));
    }

    #[test]
    fn spectrum_spans_to_nyquist() {
        let s = Session::build(4, 0.3, 20.0, 2).unwrap();
        let curve = s.pair_spectrum(1, 0, 0.5).unwrap();
        assert_eq!(curve.len(), 129);
        assert!(curve.iter().all(|v| (0.0..=1.0 + 1e-12).contains(v)));
        assert!(s.pair_spectrum(9, 0, 0.5).is_err());
    }

    #[test]
    fn metrics_json_has_every_measure() {
        let s = Session::build(5, 0.3, 20.0, 3).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s.metrics(1).unwrap()).unwrap();
        assert_eq!(v["band"], "theta");
        assert_eq!(v["strength"].as_array().unwrap().len(), 5);
        let e = v["efficiency"].as_f64().unwrap();
        assert!(e > 0.0 && e.is_finite());
        assert!(s.metrics(7).is_err());
    }
}
