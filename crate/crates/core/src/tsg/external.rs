use super::bundle::{read_bundle, write_bundle, BundleMode, ExchangeBundle, Manifest, SCHEMA_VERSION};
use super::{Capabilities, FitContext, TsgError, TsgModel};
use crate::market_data::ReturnMatrix;
use ndarray::Array2;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

#[derive(Debug, Clone)]
struct Fitted {
    tau: usize,
    train: ReturnMatrix,
}

/// Stage directory name for a reconstruction request: inputs whose
/// timestamps match the fitted window are the training pass.
fn reconstruct_stage(fitted: &Fitted, input: &ReturnMatrix) -> &'static str {
    if input.timestamps() == fitted.train.timestamps() {
        "reconstruct-train"
    } else {
        "reconstruct-test"
    }
}

fn check_response(
    model: &str,
    bundle: &ExchangeBundle,
    mode: BundleMode,
    tau: usize,
    assets: &[String],
    length: usize,
) -> Result<(), TsgError> {
    let m = &bundle.manifest;
    let fail = |reason: String| TsgError::External {
        model: model.to_string(),
        reason,
    };
    if m.mode != mode {
        return Err(fail(format!("response mode {:?}, expected {:?}", m.mode, mode)));
    }
    if m.tau != tau {
        return Err(fail(format!("response for tau {}, expected {tau}", m.tau)));
    }
    if m.asset_ids != assets {
        return Err(fail("response asset ids differ from the request".into()));
    }
    if m.length != length {
        return Err(fail(format!("response length {}, expected {length}", m.length)));
    }
    Ok(())
}

/// Generator living in another process, driven through request/response
/// bundles: `<command...> --request <dir> --response <dir>`.
///
/// Generation requests carry the training window as payload and ask for a
/// window of the same length. Reconstruction requests are sent train first,
/// then test, under the same `tau`, so a stateful adapter may fit on the
/// first one.
#[derive(Debug, Clone)]
pub struct ExternalCommandModel {
    id: String,
    command: Vec<String>,
    workdir: PathBuf,
    capabilities: Capabilities,
    fitted: Option<Fitted>,
}

impl ExternalCommandModel {
    pub fn new(
        id: String,
        command: Vec<String>,
        workdir: PathBuf,
        capabilities: Capabilities,
    ) -> Result<Self, TsgError> {
        if command.is_empty() {
            return Err(TsgError::InvalidConfig(format!("model {id}: empty command")));
        }
        Ok(Self {
            id,
            command,
            workdir,
            capabilities,
            fitted: None,
        })
    }

    fn fitted(&self) -> Result<&Fitted, TsgError> {
        self.fitted
            .as_ref()
            .ok_or_else(|| TsgError::NotTrained(self.id.clone()))
    }

    fn call(&self, stage: &str, request: &ExchangeBundle) -> Result<ExchangeBundle, TsgError> {
        let base = self
            .workdir
            .join(&self.id)
            .join(format!("tau-{}", request.manifest.tau))
            .join(stage);
        let req = base.join("request");
        let resp = base.join("response");
        for dir in [&req, &resp] {
            if dir.exists() {
                fs::remove_dir_all(dir).map_err(|e| self.err(format!("{}: {e}", dir.display())))?;
            }
        }
        write_bundle(request, &req)?;
        let output = Command::new(&self.command[0])
            .args(&self.command[1..])
            .arg("--request")
            .arg(&req)
            .arg("--response")
            .arg(&resp)
            .output()
            .map_err(|e| self.err(format!("cannot start {:?}: {e}", self.command[0])))?;
        if !output.status.success() {
            return Err(self.err(format!(
                "adapter exited with {}: {}",
                output.status,
                String::from_utf8_lossy(&output.stderr).trim()
            )));
        }
        Ok(read_bundle(&resp)?)
    }

    fn err(&self, reason: String) -> TsgError {
        TsgError::External {
            model: self.id.clone(),
            reason,
        }
    }
}

impl TsgModel for ExternalCommandModel {
    fn id(&self) -> &str {
        &self.id
    }

    fn capabilities(&self) -> Capabilities {
        self.capabilities
    }

    fn fit(&mut self, ctx: &FitContext<'_>) -> Result<(), TsgError> {
        self.fitted = Some(Fitted {
            tau: ctx.tau,
            train: ctx.train.clone(),
        });
        Ok(())
    }

    fn generate(&self, n: usize, length: usize, seed: u64) -> Result<Array2<f64>, TsgError> {
        let fitted = self.fitted()?;
        if length != fitted.train.len() || n != fitted.train.n_assets() {
            return Err(TsgError::ShapeMismatch(format!(
                "external generators produce windows shaped like the training data ({} x {}), asked for {n} x {length}",
                fitted.train.n_assets(),
                fitted.train.len()
            )));
        }
        let request = ExchangeBundle {
            manifest: Manifest {
                schema_version: SCHEMA_VERSION,
                model_id: self.id.clone(),
                mode: BundleMode::Generate,
                tau: fitted.tau,
                n,
                length,
                seed,
                asset_ids: fitted.train.assets().to_vec(),
            },
            payload: fitted.train.values().clone(),
        };
        let response = self.call("generate", &request)?;
        check_response(
            &self.id,
            &response,
            BundleMode::Generate,
            fitted.tau,
            fitted.train.assets(),
            length,
        )?;
        Ok(response.payload)
    }

    fn reconstruct(&self, input: &ReturnMatrix) -> Result<Array2<f64>, TsgError> {
        let fitted = self.fitted()?;
        let request = ExchangeBundle {
            manifest: Manifest {
                schema_version: SCHEMA_VERSION,
                model_id: self.id.clone(),
                mode: BundleMode::Reconstruct,
                tau: fitted.tau,
                n: input.n_assets(),
                length: input.len(),
                seed: 0,
                asset_ids: input.assets().to_vec(),
            },
            payload: input.values().clone(),
        };
        let response = self.call(reconstruct_stage(fitted, input), &request)?;
        check_response(
            &self.id,
            &response,
            BundleMode::Reconstruct,
            fitted.tau,
            input.assets(),
            input.len(),
        )?;
        Ok(response.payload)
    }
}

/// Responses computed offline and stored as
/// `<root>/tau-<tau>/{generate,reconstruct-train,reconstruct-test}/`.
#[derive(Debug, Clone)]
pub struct BundleDirModel {
    id: String,
    root: PathBuf,
    capabilities: Capabilities,
    fitted: Option<Fitted>,
}

impl BundleDirModel {
    pub fn new(id: String, root: PathBuf, capabilities: Capabilities) -> Self {
        Self {
            id,
            root,
            capabilities,
            fitted: None,
        }
    }

    fn stage_dir(&self, tau: usize, stage: &str) -> PathBuf {
        self.root.join(format!("tau-{tau}")).join(stage)
    }

    fn load(&self, dir: &Path) -> Result<ExchangeBundle, TsgError> {
        if !dir.exists() {
            return Err(TsgError::External {
                model: self.id.clone(),
                reason: format!("missing bundle {}", dir.display()),
            });
        }
        Ok(read_bundle(dir)?)
    }
}

impl TsgModel for BundleDirModel {
    fn id(&self) -> &str {
        &self.id
    }

    fn capabilities(&self) -> Capabilities {
        self.capabilities
    }

    fn fit(&mut self, ctx: &FitContext<'_>) -> Result<(), TsgError> {
        if !self.root.is_dir() {
            return Err(TsgError::External {
                model: self.id.clone(),
                reason: format!("bundle directory {} not found", self.root.display()),
            });
        }
        self.fitted = Some(Fitted {
            tau: ctx.tau,
            train: ctx.train.clone(),
        });
        Ok(())
    }

    fn generate(&self, _n: usize, length: usize, _seed: u64) -> Result<Array2<f64>, TsgError> {
        let fitted = self
            .fitted
            .as_ref()
            .ok_or_else(|| TsgError::NotTrained(self.id.clone()))?;
        let bundle = self.load(&self.stage_dir(fitted.tau, "generate"))?;
        check_response(
            &self.id,
            &bundle,
            BundleMode::Generate,
            fitted.tau,
            fitted.train.assets(),
            length,
        )?;
        Ok(bundle.payload)
    }

    fn reconstruct(&self, input: &ReturnMatrix) -> Result<Array2<f64>, TsgError> {
        let fitted = self
            .fitted
            .as_ref()
            .ok_or_else(|| TsgError::NotTrained(self.id.clone()))?;
        let bundle = self.load(&self.stage_dir(fitted.tau, reconstruct_stage(fitted, input)))?;
        check_response(
            &self.id,
            &bundle,
            BundleMode::Reconstruct,
            fitted.tau,
            input.assets(),
            input.len(),
        )?;
        Ok(bundle.payload)
    }
}
