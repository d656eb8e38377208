use std::collections::BTreeMap;
use std::sync::Arc;

use super::{ChatProvider, HttpProvider, ProviderConfig, ProviderError, RecordProvider, ReplayProvider};

pub type ProviderFactory =
    Box<dyn Fn(&ProviderConfig) -> Result<Arc<dyn ChatProvider>, ProviderError> + Send + Sync>;

/// Provider backends keyed by `ProviderConfig::kind`.
pub struct ProviderRegistry {
    factories: BTreeMap<String, ProviderFactory>,
}

impl ProviderRegistry {
    pub fn empty() -> Self {
        Self { factories: BTreeMap::new() }
    }

    pub fn with_builtins() -> Self {
        let mut registry = Self::empty();
        registry.register("http", Box::new(|c| Ok(Arc::new(HttpProvider::new(c.clone())?))));
        registry.register("replay", Box::new(|c| {
            let path = c
                .transcript
                .as_deref()
                .ok_or_else(|| ProviderError::Config("replay needs a transcript path".into()))?;
            Ok(Arc::new(ReplayProvider::from_file(path)?))
        }));
        registry.register("record", Box::new(|c| Ok(Arc::new(RecordProvider::new(c.clone())?))));
        registry
    }

    /// Registers (or replaces) a backend.
    pub fn register(&mut self, kind: &str, factory: ProviderFactory) {
        self.factories.insert(kind.to_string(), factory);
    }

    pub fn create(&self, config: &ProviderConfig) -> Result<Arc<dyn ChatProvider>, ProviderError> {
        let factory = self
            .factories
            .get(&config.kind)
            .ok_or_else(|| ProviderError::UnknownProvider(config.kind.clone()))?;
        factory(config)
    }

    pub fn kinds(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }
}

impl Default for ProviderRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::CompletionRequest;

    struct Echo;

    impl ChatProvider for Echo {
        fn name(&self) -> &str {
            "echo"
        }
        fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderError> {
            Ok(request.messages.last().map(|m| m.content.clone()).unwrap_or_default())
        }
    }

    #[test]
    fn builtins_are_registered() {
        let r = ProviderRegistry::with_builtins();
        assert_eq!(r.kinds().collect::<Vec<_>>(), ["http", "record", "replay"]);
    }

    #[test]
    fn custom_backend_selected_by_name() {
        let mut r = ProviderRegistry::with_builtins();
        r.register("echo", Box::new(|_| Ok(Arc::new(Echo))));
        let config = ProviderConfig { kind: "echo".into(), ..ProviderConfig::default() };
        let p = r.create(&config).unwrap();
        assert_eq!(p.name(), "echo");
    }

    #[test]
    fn unknown_kind_fails() {
        let config = ProviderConfig { kind: "carrier-pigeon".into(), ..ProviderConfig::default() };
        assert!(matches!(
            ProviderRegistry::with_builtins().create(&config),
            Err(ProviderError::UnknownProvider(_))
        ));
    }
}
