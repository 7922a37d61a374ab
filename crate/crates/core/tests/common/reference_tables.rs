//! Published reference tables: per target, the ground-truth top 10 and the
//! ESM-LogME top 10 with realised performances, plus the per-target
//! ESM-LogME regret column.

pub struct TargetTable {
    pub target: &'static str,
    pub ground_truth_top: &'static [(&'static str, f64)],
    pub esm_logme_top: &'static [(&'static str, f64)],
    pub regret_at_1: f64,
}

pub const IMDB: TargetTable = TargetTable {
    target: "imdb",
    ground_truth_top: &[
        ("rotten_tomatoes:default", 81.0),
        ("amazon_polarity:amazon_polarity", 80.5),
        ("sst:dictionary", 80.4),
        ("yelp_polarity:plain_text", 80.3),
        ("senti_lex:hi", 80.3),
        ("BDas/EnglishNLPDataset:EnglishData", 80.2),
        ("senti_lex:bg", 80.2),
        ("KBLab/overlim:sst_da", 80.1),
        ("tweet_eval:emotion", 80.0),
        ("silicone:sem", 80.0),
    ],
    esm_logme_top: &[
        ("sst:dictionary", 80.4),
        ("sst:default", 78.6),
        ("kuroneko5943/snap21:CDs_and_Vinyl_5", 78.6),
        ("kuroneko5943/snap21:Video_Games_5", 77.4),
        ("kuroneko5943/snap21:Movies_and_TV_5", 79.3),
        ("amazon_polarity:amazon_polarity", 80.5),
        ("glue:sst2", 79.9),
        ("Patt/ReCoRD_TH_drop:default", 72.2),
        ("rotten_tomatoes:default", 81.0),
        ("evaluate/glue-ci:sst2", 79.9),
    ],
    regret_at_1: 0.74,
};

pub const PAWS_X: TargetTable = TargetTable {
    target: "paws-x",
    ground_truth_top: &[
        ("paws:labeled_final", 87.4),
        ("xtreme:PAWS-X.en", 87.0),
        ("paws-x:es", 85.7),
        ("paws:unlabeled_final", 85.4),
        ("paws-x:fr", 85.2),
        ("xtreme:PAWS-X.es", 84.3),
        ("paws-x:de", 84.2),
        ("xtreme:PAWS-X.de", 83.1),
        ("xtreme:PAWS-X.zh", 82.5),
        ("paws-x:zh", 82.5),
    ],
    esm_logme_top: &[
        ("paws:labeled_final", 87.4),
        ("claritylab/utcd:out-of-domain", 55.4),
        ("tasksource/zero-shot-label-nli:default", 53.8),
        ("turkish_product_reviews:default", 55.3),
        ("swag:full", 53.8),
        ("go_emotions:raw", 55.2),
        ("seara/ru_go_emotions:raw", 55.2),
        ("davebulaval/CSMD:meaning", 55.6),
        ("metaeval/defeasible-nli:social", 55.5),
        ("TheBritishLibrary/blbooksgenre:annotated", 52.9),
    ],
    regret_at_1: 0.0,
};

pub const MDGB: TargetTable = TargetTable {
    target: "mdgb",
    ground_truth_top: &[
        ("md_gender_bias:opensubtitles_inferred", 83.0),
        ("md_gender_bias:yelp_inferred", 82.7),
        ("klue:re", 82.5),
        ("AmazonScience/massive:sw-KE", 82.2),
        ("AI-Sweden/SuperLim:sweana", 81.7),
        ("md_gender_bias:light_inferred", 81.6),
        ("DBQ/Mr.Porter.Product.prices.Hungary:de", 81.5),
        ("conv_ai_3:conv_ai_3", 81.4),
        ("sagteam/author_profiling:main", 81.3),
        ("DBQ/Gucci.Product.prices.Romania:default", 81.2),
    ],
    esm_logme_top: &[
        ("md_gender_bias:opensubtitles_inferred", 83.0),
        ("Patt/ReCoRD_TH_drop:default", 69.7),
        ("md_gender_bias:light_inferred", 81.6),
        ("md_gender_bias:wizard", 77.9),
        ("sagteam/author_profiling:main", 81.3),
        ("art:anli", 73.7),
        ("md_gender_bias:funpedia", 78.1),
        ("omp:posts_unlabeled", 75.9),
        ("swag:full", 71.2),
        ("metaeval/defeasible-nli:social", 75.8),
    ],
    regret_at_1: 0.0,
};

pub const TABLES: [TargetTable; 3] = [IMDB, PAWS_X, MDGB];

/// ESM-LogME regret@5 per target (IMDB, TEE, TES, PAWS-X, MDGB, J-STS, GWQ, QCC).
pub const ESM_LOGME_REGRET_AT_5: [f64; 8] = [0.74, 8.82, 0.0, 0.0, 0.0, 4.65, 9.41, 0.0];
pub const ESM_LOGME_AVG_REGRET_AT_5: f64 = 2.95;

impl TargetTable {
    /// Union of both top-10 lists; the pool best is the ground-truth top 1.
    pub fn pool(&self) -> Vec<(&'static str, f64)> {
        let mut pool: Vec<(&'static str, f64)> = self.ground_truth_top.to_vec();
        for &(id, perf) in self.esm_logme_top {
            if !pool.iter().any(|(p, _)| *p == id) {
                pool.push((id, perf));
            }
        }
        pool
    }

    pub fn ranked_ids(&self) -> Vec<&'static str> {
        self.esm_logme_top.iter().map(|(id, _)| *id).collect()
    }
}
