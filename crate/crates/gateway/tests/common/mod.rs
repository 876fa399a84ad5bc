#![allow(dead_code)]

use parking_lot::Mutex;
use sidewalk_analytics::{parse_log, AnalyticsEvent, EventLog};
use sidewalk_core::scenario::ScenarioConfig;
use sidewalk_core::sensing::SensorConfig;
use sidewalk_gateway::{serve, Gateway, GatewayConfig, SharedLog};
use std::io::Write;
use std::net::SocketAddr;
use std::sync::Arc;
use tokio::net::TcpListener;

/// A log sink tests can read back.
#[derive(Clone, Default)]
pub struct SharedBuf(pub Arc<Mutex<Vec<u8>>>);

impl Write for SharedBuf {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.0.lock().extend_from_slice(buf);
        Ok(buf.len())
    }

    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

impl SharedBuf {
    pub fn events(&self) -> Vec<AnalyticsEvent> {
        parse_log(std::str::from_utf8(&self.0.lock()).unwrap()).unwrap()
    }

    pub fn log(&self) -> SharedLog {
        Arc::new(Mutex::new(EventLog::new(Box::new(self.clone()) as Box<dyn Write + Send>)))
    }
}

pub fn scenario(name: &str, obstacles: &str) -> ScenarioConfig {
    ScenarioConfig::parse(&format!(
        "format = 1\nname = \"{name}\"\nlength_m = 20.0\nwidth_m = 3.0\nseed = 1\n{obstacles}"
    ))
    .unwrap()
}

/// Bundled scenarios plus a cone dead ahead and a hydrant 3 m ahead, with
/// a sensor that never drops returns.
pub fn test_config(buf: &SharedBuf) -> GatewayConfig {
    let mut cfg = GatewayConfig::new();
    cfg.sensor = SensorConfig::ideal();
    cfg.log = Some(buf.log());
    for s in [
        scenario("cone", "[[obstacles]]\nkind = \"construction_cone\"\nx = 2.5\ny = 1.5\nradius = 0.18\n"),
        scenario("hydrant", "[[obstacles]]\nkind = \"fire_hydrant\"\nx = 3.7\ny = 1.5\nradius = 0.2\n"),
    ] {
        cfg.scenarios.insert(s.name.clone(), s);
    }
    cfg
}

pub async fn spawn(cfg: GatewayConfig) -> (SocketAddr, Arc<Gateway>) {
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let gateway = Arc::new(Gateway::new(cfg));
    tokio::spawn(serve(listener, gateway.clone()));
    (addr, gateway)
}
