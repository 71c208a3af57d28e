//! Property tests over the public API.

mod analytic_props;
