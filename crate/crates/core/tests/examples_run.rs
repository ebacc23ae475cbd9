macro_rules! example {
    ($name:ident) => {
        #[allow(dead_code)]
        mod $name {
            include!(concat!("../examples/", stringify!($name), ".rs"));

            #[test]
            fn runs() {
                run().unwrap();
            }
        }
    };
}

example!(effective_distance);
example!(simulate_outbreak);
example!(infer_source);
example!(ingest_observations);
example!(radial_layout_stages);
