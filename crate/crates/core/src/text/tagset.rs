use std::collections::HashMap;
use std::sync::OnceLock;

use super::TextError;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

const PENN: [&str; 37] = [
    "PAD", "CC", "CD", "DT", "EX", "FW", "IN", "JJ", "JJR", "JJS", "LS", "MD", "NN", "NNS", "NNP", "NNPS", "PDT",
    "POS", "PRP", "PRP$", "RB", "RBR", "RBS", "RP", "SYM", "TO", "UH", "VB", "VBD", "VBG", "VBN", "VBP", "VBZ", "WDT",
    "WP", "WP$", "WRB",
];

/// Index into a [`TagSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Tag(pub u8);

impl Tag {
    pub const PAD: Tag = Tag(0);

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Ordered tag inventory; PAD is always index 0.
#[derive(Debug, Clone, PartialEq)]
pub struct TagSet {
    tags: Vec<String>,
    index: HashMap<String, Tag>,
}

impl TagSet {
    /// 36 Penn Treebank tags plus PAD.
    pub fn penn() -> &'static TagSet {
        static SET: OnceLock<TagSet> = OnceLock::new();
        SET.get_or_init(|| TagSet::from_names(&PENN))
    }

    fn from_names(names: &[&str]) -> TagSet {
        let tags: Vec<String> = names.iter().map(|s| s.to_string()).collect();
        let index = tags
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), Tag(i as u8)))
            .collect();
        TagSet { tags, index }
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<Tag> {
        self.index.get(name).copied()
    }

    pub fn tag(&self, name: &str) -> Result<Tag, TextError> {
        self.get(name).ok_or_else(|| TextError::UnknownTag(name.to_string()))
    }

    pub fn name(&self, tag: Tag) -> &str {
        &self.tags[tag.index()]
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.tags.iter().map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PosTagSequence {
    pub tags: Vec<Tag>,
}

impl PosTagSequence {
    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn names<'a>(&'a self, tagset: &'a TagSet) -> Vec<&'a str> {
        self.tags.iter().map(|&t| tagset.name(t)).collect()
    }
}

/// `[len × |tagset|]` indicator matrix with a single 1 per row.
pub fn one_hot<T: Scalar>(tags: &PosTagSequence, tagset: &TagSet) -> Result<Tensor<T>, TextError> {
    let width = tagset.len();
    let mut data = vec![T::zero(); tags.len() * width];
    for (row, &t) in tags.tags.iter().enumerate() {
        if t.index() >= width {
            return Err(TextError::UnknownTag(format!("#{}", t.0)));
        }
        data[row * width + t.index()] = T::one();
    }
    Tensor::new(vec![tags.len(), width], data).map_err(|_| TextError::EmptyText)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn penn_has_37_dense_indices() {
        let ts = TagSet::penn();
        assert_eq!(ts.len(), 37);
        assert_eq!(ts.get("PAD"), Some(Tag::PAD));
        for (i, name) in ts.names().enumerate() {
            assert_eq!(ts.get(name), Some(Tag(i as u8)));
        }
    }

    #[test]
    fn one_hot_rows() {
        let ts = TagSet::penn();
        let seq = PosTagSequence {
            tags: vec![Tag(5), Tag::PAD, ts.get("NN").unwrap()],
        };
        let m: Tensor<f64> = one_hot(&seq, ts).unwrap();
        assert_eq!(m.shape(), &[3, 37]);
        assert_eq!(m.at2(0, 5), 1.0);
        assert_eq!(m.at2(1, 0), 1.0);
        for r in 0..3 {
            assert_eq!(m.row(r).iter().sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn one_hot_unknown() {
        let seq = PosTagSequence { tags: vec![Tag(40)] };
        assert!(matches!(
            one_hot::<f64>(&seq, TagSet::penn()),
            Err(TextError::UnknownTag(_))
        ));
    }
}
