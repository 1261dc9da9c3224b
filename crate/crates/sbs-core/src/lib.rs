//! Semantic brand scoring over word co-occurrence networks.
//!
//! The pipeline turns a dated news corpus into weekly brand-importance
//! scores and vote-share forecasts:
//!
//! 1. [`ingest`] — load or fetch articles, restrict them to the analysis
//!    period and bucket them into ISO calendar weeks.
//! 2. [`textprep`] — normalize brand aliases, truncate each article to its
//!    leading fraction, tokenize, drop stopwords and stem.
//! 3. [`graph`] — build the undirected weighted word co-occurrence network
//!    and prune weak arcs.
//! 4. [`centrality`] — prevalence (term frequency), diversity (degree) and
//!    connectivity (weighted betweenness over reciprocal arc distances).
//! 5. [`sbs`] — standardize the three dimensions over each window's
//!    relevant word set and sum them into the composite score.
//! 6. [`forecast`] — convert scores into vote shares, adjust official
//!    results over the tracked options and evaluate with APE/MAPE/MAE and
//!    rank agreement. Score-to-share strategies live in [`basis`].

pub mod basis;
pub mod centrality;
pub mod fetch;
pub mod forecast;
pub mod graph;
pub mod ingest;
pub mod sbs;
pub mod textprep;
